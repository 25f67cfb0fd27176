#pragma once

#include <cstdint>
#include <string>

#include "dgp.hpp"
#include "pipeline.hpp"
#include "seir.hpp"

namespace factimp {

/// Monte Carlo study configuration. Each replication draws a fresh panel
/// from the chosen generator, runs the full estimation pipeline, and records
/// bias, RMSE, and confidence-interval behavior against the planted truth.
struct McConfig {
    std::string dgp = "linear";  // linear | seir
    int reps = 500;
    std::uint64_t seed = 1;
    int threads = 0;             // 0: pick a small default; results identical either way
    int eval_event = 21;         // event time used for the significance decision
    LinearDgpConfig linear;
    SeirPanelConfig seir;
    int seir_n_treated = 39;     // staggered schedule generated for the SEIR DGP
    int seir_first_policy_day = 28;
    int seir_last_policy_day = 43;
    std::string group_name = "group";  // evaluated when linear.group_size > 0
    RunConfig estimation;
};

struct McReport {
    std::string dgp;
    int reps = 0;
    int failed = 0;
    double planted_theta = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;        // CI covers the planted effect, pooled over (rep, event)
    double coverage_se = 0.0;     // binomial MC standard error
    double zero_coverage = 0.0;   // CI covers zero, pooled over (rep, event)
    double mean_ci_width = 0.0;
    double sig_negative_rate = 0.0;  // share of reps with CI entirely below 0 at eval_event
    double group_coverage = 0.0;
    double group_coverage_se = 0.0;
    bool has_group = false;
    std::uint64_t seed = 0;
    std::vector<std::string> failures;  // first few failure messages

    std::string render() const;  // deterministic text report
};

/// Runs the study. Replications execute concurrently on isolated state with
/// per-replication seeds; aggregation order is fixed, so the report is
/// byte-identical for a given master seed. Individual replication failures
/// are recorded; more than 10% failures aborts with a summary.
McReport run_monte_carlo(const McConfig& config);

McConfig mc_config_from_json(const std::string& json_text);
std::string mc_config_to_json(const McConfig& config);

}  // namespace factimp
