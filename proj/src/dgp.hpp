#pragma once

#include <cstdint>
#include <vector>

#include "panel.hpp"

namespace factimp {

/// Linear interactive-fixed-effects data-generating process with a planted
/// constant treatment effect, used by the Monte Carlo validation harness.
/// Factors and loadings are i.i.d. Gaussian; a configurable share of each
/// group unit's error can come from a shared group-level shock, which is the
/// regime where per-group inference matters.
struct LinearDgpConfig {
    int N = 55;
    int T = 61;
    int N0 = 16;            // units 0..N0-1 stay untreated
    int r = 2;              // true factor count
    double sigma_e = 0.1;   // idiosyncratic error sd
    double theta = -0.098;  // planted constant effect on treated post cells
    double beta = 1.5;      // one lagged covariate
    double gamma = -0.5;    // one contemporaneous covariate
    double loading_mean = 0.7;
    int first_policy_day = 28;  // earliest announcement (=> t0_common)
    int last_policy_day = 43;   // announcements spread uniformly over the range
    // Optional group block: group_size treated units share one announcement
    // day and a common error shock with variance share group_shock_rho.
    int group_size = 0;
    int group_policy_day = 30;
    double group_shock_rho = 0.0;
};

struct LinearDgpDraw {
    PanelDataset panel;
    double theta_true;
    std::vector<int> group_units;  // filled when group_size > 0
};

LinearDgpDraw draw_linear_factor_panel(const LinearDgpConfig& config, std::uint64_t seed);

}  // namespace factimp
