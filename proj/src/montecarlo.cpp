#include "montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <thread>

#include "csv.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace factimp {

using nlohmann::json;

namespace {

struct RepOutcome {
    bool ok = false;
    std::string error;
    // per event time
    std::vector<double> estimate, ci_lo, ci_hi;
    std::vector<double> g_estimate, g_ci_lo, g_ci_hi;
    bool sig_negative = false;
};

std::vector<int> seir_schedule(const McConfig& cfg) {
    std::vector<int> days(cfg.seir.n_units, -1);
    const int n1 = std::min(cfg.seir_n_treated, cfg.seir.n_units - 1);
    const int span = std::max(1, cfg.seir_last_policy_day - cfg.seir_first_policy_day + 1);
    for (int k = 0; k < n1; ++k) {
        days[cfg.seir.n_units - 1 - k] = cfg.seir_first_policy_day + (k % span);
    }
    return days;
}

RepOutcome run_rep(const McConfig& cfg, int rep) {
    RepOutcome out;
    try {
        PanelDataset panel;
        double truth = 0.0;
        const std::uint64_t rep_seed = derive_seed(cfg.seed, 101, rep);
        std::vector<int> group_units;
        if (cfg.dgp == "seir") {
            SeirPanelConfig sc = cfg.seir;
            sc.seed = rep_seed;
            if (sc.policy_days.empty()) sc.policy_days = seir_schedule(cfg);
            panel = simulate_panel(sc).panel;
            truth = 0.0;  // the SEIR truth is the placebo null; see sig_negative
        } else {
            LinearDgpDraw draw = draw_linear_factor_panel(cfg.linear, rep_seed);
            panel = std::move(draw.panel);
            truth = draw.theta_true;
            group_units = draw.group_units;
        }

        RunConfig est = cfg.estimation;
        est.seed = rep_seed;
        est.groups.clear();
        if (!group_units.empty()) {
            std::vector<std::string> names;
            for (int i : group_units) names.push_back(panel.units[i]);
            est.groups.emplace_back(cfg.group_name, names);
        }
        const ResultsBundle res = run_estimation(panel, est);

        for (const auto& row : res.att) {
            const int s = row.event_time;
            if (static_cast<int>(out.estimate.size()) <= s) {
                out.estimate.resize(s + 1, kMissing);
                out.ci_lo.resize(s + 1, kMissing);
                out.ci_hi.resize(s + 1, kMissing);
            }
            out.estimate[s] = row.estimate;
            out.ci_lo[s] = row.ci_lo;
            out.ci_hi[s] = row.ci_hi;
            if (s == cfg.eval_event) out.sig_negative = row.ci_hi < 0.0;
        }
        if (!group_units.empty()) {
            for (const auto& row : res.groups.at(cfg.group_name)) {
                const int s = row.event_time;
                if (static_cast<int>(out.g_estimate.size()) <= s) {
                    out.g_estimate.resize(s + 1, kMissing);
                    out.g_ci_lo.resize(s + 1, kMissing);
                    out.g_ci_hi.resize(s + 1, kMissing);
                }
                out.g_estimate[s] = row.estimate;
                out.g_ci_lo[s] = row.ci_lo;
                out.g_ci_hi[s] = row.ci_hi;
            }
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

McReport run_monte_carlo(const McConfig& cfg) {
    if (cfg.reps < 2) throw ValidationError("montecarlo needs at least 2 replications");
    std::vector<RepOutcome> results(cfg.reps);

    int threads = cfg.threads;
    if (threads <= 0) {
        threads = std::min<unsigned>(4, std::max<unsigned>(1, std::thread::hardware_concurrency()));
    }
    threads = std::min(threads, cfg.reps);
    // Each replication writes only its own slot; aggregation below runs in
    // index order, so the report does not depend on the thread count.
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= cfg.reps) return;
            results[rep] = run_rep(cfg, rep);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    McReport rep;
    rep.dgp = cfg.dgp;
    rep.seed = cfg.seed;
    rep.reps = cfg.reps;
    rep.planted_theta = cfg.dgp == "seir" ? 0.0 : cfg.linear.theta;
    rep.has_group = cfg.dgp != "seir" && cfg.linear.group_size > 0;

    const double truth = rep.planted_theta;
    double bias_acc = 0.0, mse_acc = 0.0, width_acc = 0.0;
    long long n_est = 0;
    long long cover = 0, cover_n = 0, zero_cover = 0;
    long long g_cover = 0, g_cover_n = 0;
    int sig_neg = 0, sig_n = 0;
    for (int k = 0; k < cfg.reps; ++k) {
        const RepOutcome& r = results[k];
        if (!r.ok) {
            ++rep.failed;
            if (rep.failures.size() < 5) {
                rep.failures.push_back("rep " + std::to_string(k) + ": " + r.error);
            }
            continue;
        }
        for (size_t s = 0; s < r.estimate.size(); ++s) {
            if (is_missing(r.estimate[s])) continue;
            bias_acc += r.estimate[s] - truth;
            mse_acc += (r.estimate[s] - truth) * (r.estimate[s] - truth);
            width_acc += r.ci_hi[s] - r.ci_lo[s];
            ++n_est;
            ++cover_n;
            if (r.ci_lo[s] <= truth && truth <= r.ci_hi[s]) ++cover;
            if (r.ci_lo[s] <= 0.0 && 0.0 <= r.ci_hi[s]) ++zero_cover;
        }
        for (size_t s = 0; s < r.g_estimate.size(); ++s) {
            if (is_missing(r.g_estimate[s])) continue;
            ++g_cover_n;
            if (r.g_ci_lo[s] <= truth && truth <= r.g_ci_hi[s]) ++g_cover;
        }
        ++sig_n;
        if (r.sig_negative) ++sig_neg;
    }
    if (rep.failed * 10 > cfg.reps) {
        std::string msg = "montecarlo aborted: " + std::to_string(rep.failed) + "/" +
                          std::to_string(cfg.reps) + " replications failed";
        for (const auto& f : rep.failures) msg += "\n  " + f;
        throw ComputationError(msg);
    }
    if (n_est > 0) {
        rep.bias = bias_acc / n_est;
        rep.rmse = std::sqrt(mse_acc / n_est);
        rep.mean_ci_width = width_acc / n_est;
    }
    if (cover_n > 0) {
        rep.coverage = static_cast<double>(cover) / cover_n;
        rep.coverage_se = std::sqrt(rep.coverage * (1.0 - rep.coverage) /
                                    static_cast<double>(std::max(rep.reps - rep.failed, 1)));
        rep.zero_coverage = static_cast<double>(zero_cover) / cover_n;
    }
    if (g_cover_n > 0) {
        rep.group_coverage = static_cast<double>(g_cover) / g_cover_n;
        rep.group_coverage_se = std::sqrt(rep.group_coverage * (1.0 - rep.group_coverage) /
                                          static_cast<double>(std::max(rep.reps - rep.failed, 1)));
    }
    if (sig_n > 0) rep.sig_negative_rate = static_cast<double>(sig_neg) / sig_n;
    return rep;
}

std::string McReport::render() const {
    std::string s;
    s += "monte carlo report\n";
    s += "dgp: " + dgp + "\n";
    s += "seed: " + std::to_string(seed) + "\n";
    s += "replications: " + std::to_string(reps) + " (failed " + std::to_string(failed) + ")\n";
    s += "planted_theta: " + format_double(planted_theta) + "\n";
    s += "bias: " + format_double(bias) + "\n";
    s += "rmse: " + format_double(rmse) + "\n";
    s += "coverage: " + format_double(coverage) + " (mc se " + format_double(coverage_se) + ")\n";
    s += "zero_coverage: " + format_double(zero_coverage) + "\n";
    s += "mean_ci_width: " + format_double(mean_ci_width) + "\n";
    s += "sig_negative_rate: " + format_double(sig_negative_rate) + "\n";
    if (has_group) {
        s += "group_coverage: " + format_double(group_coverage) + " (mc se " +
             format_double(group_coverage_se) + ")\n";
    }
    for (const auto& f : failures) s += "failure: " + f + "\n";
    return s;
}

McConfig mc_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("montecarlo JSON: ") + e.what());
    }
    McConfig c;
    try {
        if (j.contains("dgp")) c.dgp = j["dgp"].get<std::string>();
        if (c.dgp != "linear" && c.dgp != "seir") {
            throw ValidationError("dgp must be 'linear' or 'seir'");
        }
        if (j.contains("reps")) c.reps = j["reps"].get<int>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("threads")) c.threads = j["threads"].get<int>();
        if (j.contains("eval_event")) c.eval_event = j["eval_event"].get<int>();
        if (j.contains("group_name")) c.group_name = j["group_name"].get<std::string>();
        if (j.contains("linear")) {
            const json& l = j["linear"];
            auto get = [&](const char* k, auto& into) {
                if (l.contains(k)) into = l[k].get<std::decay_t<decltype(into)>>();
            };
            get("N", c.linear.N);
            get("T", c.linear.T);
            get("N0", c.linear.N0);
            get("r", c.linear.r);
            get("sigma_e", c.linear.sigma_e);
            get("theta", c.linear.theta);
            get("beta", c.linear.beta);
            get("gamma", c.linear.gamma);
            get("loading_mean", c.linear.loading_mean);
            get("first_policy_day", c.linear.first_policy_day);
            get("last_policy_day", c.linear.last_policy_day);
            get("group_size", c.linear.group_size);
            get("group_policy_day", c.linear.group_policy_day);
            get("group_shock_rho", c.linear.group_shock_rho);
        }
        if (j.contains("seir")) {
            const json& s = j["seir"];
            auto get = [&](const char* k, auto& into) {
                if (s.contains(k)) into = s[k].get<std::decay_t<decltype(into)>>();
            };
            get("n_units", c.seir.n_units);
            get("T", c.seir.T);
            get("burn_in", c.seir.burn_in);
            get("lag_m", c.seir.lag_m);
            get("beta0", c.seir.beta0);
            get("common_walk_vol", c.seir.common_walk_vol);
            get("idio_walk_vol", c.seir.idio_walk_vol);
            get("beta_multiplier", c.seir.beta_multiplier);
            get("report_noise", c.seir.report_noise);
            get("mobility_noise", c.seir.mobility_noise);
            get("beta0_spread", c.seir.beta0_spread);
            get("outcome", c.seir.outcome);
            get("sigma", c.seir.base.sigma);
            get("gamma", c.seir.base.gamma);
            get("kappa", c.seir.base.kappa);
            get("eta", c.seir.base.eta);
            get("f", c.seir.base.f);
            get("population", c.seir.base.population);
            if (s.contains("n_treated")) c.seir_n_treated = s["n_treated"].get<int>();
            if (s.contains("first_policy_day")) c.seir_first_policy_day = s["first_policy_day"].get<int>();
            if (s.contains("last_policy_day")) c.seir_last_policy_day = s["last_policy_day"].get<int>();
        }
        if (j.contains("estimation")) {
            c.estimation = run_config_from_json(j["estimation"].dump());
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("montecarlo JSON: ") + e.what());
    }
    return c;
}

std::string mc_config_to_json(const McConfig& c) {
    json j;
    j["dgp"] = c.dgp;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["eval_event"] = c.eval_event;
    j["group_name"] = c.group_name;
    j["linear"] = {{"N", c.linear.N},
                   {"T", c.linear.T},
                   {"N0", c.linear.N0},
                   {"r", c.linear.r},
                   {"sigma_e", c.linear.sigma_e},
                   {"theta", c.linear.theta},
                   {"beta", c.linear.beta},
                   {"gamma", c.linear.gamma},
                   {"loading_mean", c.linear.loading_mean},
                   {"first_policy_day", c.linear.first_policy_day},
                   {"last_policy_day", c.linear.last_policy_day},
                   {"group_size", c.linear.group_size},
                   {"group_policy_day", c.linear.group_policy_day},
                   {"group_shock_rho", c.linear.group_shock_rho}};
    j["seir"] = {{"n_units", c.seir.n_units},
                 {"T", c.seir.T},
                 {"burn_in", c.seir.burn_in},
                 {"lag_m", c.seir.lag_m},
                 {"beta0", c.seir.beta0},
                 {"common_walk_vol", c.seir.common_walk_vol},
                 {"idio_walk_vol", c.seir.idio_walk_vol},
                 {"beta_multiplier", c.seir.beta_multiplier},
                 {"report_noise", c.seir.report_noise},
                 {"mobility_noise", c.seir.mobility_noise},
                 {"beta0_spread", c.seir.beta0_spread},
                 {"outcome", c.seir.outcome},
                 {"sigma", c.seir.base.sigma},
                 {"gamma", c.seir.base.gamma},
                 {"kappa", c.seir.base.kappa},
                 {"eta", c.seir.base.eta},
                 {"f", c.seir.base.f},
                 {"population", c.seir.base.population},
                 {"n_treated", c.seir_n_treated},
                 {"first_policy_day", c.seir_first_policy_day},
                 {"last_policy_day", c.seir_last_policy_day}};
    j["estimation"] = json::parse(run_config_to_json(c.estimation));
    return j.dump();
}

}  // namespace factimp
