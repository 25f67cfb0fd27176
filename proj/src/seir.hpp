#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panel.hpp"

namespace factimp {

/// Per-day transition rates of the two-state compartment model. The pair
/// tracks an origin state plus the pool of its residents who traveled to a
/// destination state; travelers seed destination compartments but generate
/// no local transmission there.
struct SeirParams {
    double sigma = 1.0 / 5.2;  // symptomatic progression (two incubation stages)
    double gamma = 1.0 / 2.9;  // isolation (two infectious stages)
    double kappa = 0.02;       // death probability conditional on infection
    double eta = 0.2;          // recovery/reporting rate
    double f = 0.05;           // fraction of new exposures traveling out
    double population = 3.0e8; // origin population N_i
};

struct SeirState {
    double S = 0, E1 = 0, E2 = 0, I1 = 0, I2 = 0, Q = 0, C = 0, D = 0;
    double E1j = 0, E2j = 0, I1j = 0, I2j = 0, Qj = 0, Cj = 0, Dj = 0;
};

/// Per-step stability: 2*sigma, 2*gamma, kappa, and eta each within [0,1],
/// f in [0,1], population positive. Throws ValidationError otherwise.
void check_stability(const SeirParams& params);

/// One day of the discrete law of motion, origin and destination together.
SeirState seir_step(const SeirState& state, const SeirParams& params, double beta_t);

/// Geometric random walk on the transmission rate: log beta_{t+1} =
/// log beta_t + eps_t, eps_t ~ N(0, step_volatility^2). Reproducible from
/// the seed; element 0 equals beta0.
std::vector<double> transmission_walk(double beta0, double step_volatility, int T,
                                      std::uint64_t seed);

/// Synthetic-panel configuration. Every unit runs its own origin+destination
/// pair seeded with a single infectious case, so a per-unit policy
/// multiplier on beta is a genuine planted treatment.
struct SeirPanelConfig {
    int n_units = 55;
    int T = 61;                 // panel window length (days)
    int burn_in = 70;           // days simulated before the window opens
    int lag_m = 14;             // lag applied to the mobility covariate
    SeirParams base;
    double beta0 = 0.5;
    double beta0_spread = 0.05;     // log-sd of the per-state baseline transmission
    double common_walk_vol = 0.01;  // shared log-beta walk (a common factor)
    double idio_walk_vol = 0.002;   // per-unit log-beta walk
    double beta_multiplier = 1.0;   // applied to beta from each unit's policy day on
    double report_noise = 0.12;     // lognormal sd on daily confirmed increments
    double mobility_noise = 0.05;   // measurement noise on the mobility covariate
    std::vector<int> policy_days;   // announcement day index within the window; -1 = never
    std::vector<std::string> unit_names;  // optional; defaults to S01..Snn
    Date start_date{days_from_civil(2020, 2, 20)};
    std::string outcome = "cases";  // cases | deaths
    std::uint64_t seed = 1;
};

/// Full simulator output: the estimation-ready panel plus the raw series
/// (including pre-window history) needed to round-trip through CSV files.
struct SeirPanel {
    PanelDataset panel;
    Date series_start;  // first day of the raw series below
    Matrix cases;       // (history + T) x N cumulative confirmed
    Matrix deaths;      // cumulative confirmed deaths
    Matrix mobility;    // un-lagged behavioral covariate
    Matrix tests;       // contemporaneous confounder
};

SeirPanel simulate_panel(const SeirPanelConfig& config);

}  // namespace factimp
