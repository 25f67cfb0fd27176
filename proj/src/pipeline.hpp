#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "effects.hpp"
#include "factor.hpp"
#include "panel.hpp"

namespace factimp {

/// End-user estimation settings; every field maps to a CLI flag.
struct RunConfig {
    std::string outcome = "cases";               // cases | deaths
    int lag_m = -1;                              // -1: 14 for cases, 21 for deaths
    std::string policy = "stay_home";            // policy column prefix in the timeline file
    bool use_effective_date = false;             // default is the announcement date
    Date window_start{days_from_civil(2020, 2, 20)};
    Date window_end{days_from_civil(2020, 4, 20)};
    int r_fixed = -1;                            // -1: select automatically
    int r_max = -1;                              // -1: min(8, min(T0,N0)/3)
    IcPenalty ic_penalty = IcPenalty::p2;
    double ci_level = 0.95;
    std::vector<std::pair<std::string, std::vector<std::string>>> groups;  // name -> unit names
    std::uint64_t seed = 1;
    double tol = 1e-8;
    int max_iter = 1000;

    int effective_lag() const { return lag_m >= 0 ? lag_m : (outcome == "deaths" ? 21 : 14); }
};

/// Input files. Cumulative sources are ordered by precedence: the first file
/// holding a value for a (date, unit) wins.
struct LoadConfig {
    std::vector<std::string> case_files;
    std::vector<std::string> death_files;
    std::vector<std::string> covariate_files;   // lagged behavioral covariates (X)
    std::vector<std::string> confounder_files;  // contemporaneous confounders (Z)
    std::string policy_file;
};

struct LoadResult {
    PanelDataset panel;
    std::map<std::string, std::string> input_hashes;  // path -> fnv1a hex
};

/// Reads the long-format CSVs onto the master calendar, applies the
/// cross-source gap-filling rule, computes the weekly log-growth outcome,
/// lags the behavioral covariates, and derives the treatment indicator from
/// the configured policy column. Structured ValidationErrors carry file,
/// row, unit, and date context.
LoadResult load_panel(const LoadConfig& files, const RunConfig& config);

/// One row of the exported effect tables.
struct AttRow {
    int event_time = 0;
    double estimate = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int n_units = 0;
};

struct ResultsBundle {
    std::vector<AttRow> att;
    std::map<std::string, std::vector<AttRow>> groups;
    double theta_bar = 0.0;
    double theta_bar_se = 0.0;
    std::map<std::string, double> group_theta_bar;
    std::map<std::string, double> group_theta_bar_se;

    // diagnostics
    int N = 0, T = 0, N0 = 0, N1 = 0, T0 = 0;
    int r = 0, r_tall = 0, r_wide = 0;
    bool r_selected = false;  // true when r came from the information criterion
    bool converged = false;
    int iterations = 0;
    double sigma_e2 = 0.0;
    long long dof = 0;
    double delta = 0.0;
    Vector beta, gamma;
    ValidityReport validity;
    std::vector<std::string> warnings;

    // provenance
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;
};

/// Full pipeline: blocks -> factor count -> interactive-fixed-effects fit ->
/// imputation -> effects -> inference. Deterministic for fixed inputs.
/// Errors from any stage are rethrown with the stage name prepended.
ResultsBundle run_estimation(const PanelDataset& panel, const RunConfig& config,
                             const std::map<std::string, std::string>& input_hashes = {});

/// Writes att.csv, group_<name>.csv, diagnostics.txt, and *_plot.csv files
/// (UTF-8, LF, RFC-4180). Bytes are deterministic given the bundle. Returns
/// the list of files written. formats: subset of {"csv", "plot"}.
std::vector<std::string> export_results(const ResultsBundle& bundle, const std::string& out_dir,
                                        const std::vector<std::string>& formats = {"csv", "plot"});

// --- configuration (de)serialization used by the C API and the CLI ---

RunConfig run_config_from_json(const std::string& json_text);
std::string run_config_to_json(const RunConfig& config);
LoadConfig load_config_from_json(const std::string& json_text);
std::string results_to_json(const ResultsBundle& bundle);

std::uint64_t fnv1a64(const void* data, size_t n);
std::string hash_file(const std::string& path);
std::string hash_string(const std::string& text);

}  // namespace factimp
