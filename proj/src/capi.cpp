#include "factimp/factimp.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "csv.hpp"
#include "errors.hpp"
#include "montecarlo.hpp"
#include "pipeline.hpp"
#include "seir.hpp"

using nlohmann::json;

struct factimp_panel {
    factimp::PanelDataset data;
    std::map<std::string, std::string> input_hashes;
    // retained for save_csv; empty for file-loaded panels
    bool simulated = false;
    factimp::SeirPanel sim;
    std::vector<int> policy_days;
};

struct factimp_results {
    factimp::ResultsBundle bundle;
};

namespace {

thread_local std::string g_last_error;

factimp_status fail(factimp_status code, const char* what) {
    g_last_error = what ? what : "unknown error";
    return code;
}

template <typename Fn>
factimp_status guarded(Fn&& fn) {
    try {
        fn();
        return FACTIMP_OK;
    } catch (const factimp::ValidationError& e) {
        return fail(FACTIMP_ERR_VALIDATION, e.what());
    } catch (const factimp::ComputationError& e) {
        return fail(FACTIMP_ERR_COMPUTE, e.what());
    } catch (const std::exception& e) {
        return fail(FACTIMP_ERR_COMPUTE, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

factimp::SeirPanelConfig sim_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw factimp::ValidationError(std::string("simulate JSON: ") + e.what());
    }
    factimp::SeirPanelConfig c;
    try {
        auto get = [&](const char* k, auto& into) {
            if (j.contains(k)) into = j[k].get<std::decay_t<decltype(into)>>();
        };
        get("n_units", c.n_units);
        get("T", c.T);
        get("burn_in", c.burn_in);
        get("lag_m", c.lag_m);
        get("beta0", c.beta0);
        get("common_walk_vol", c.common_walk_vol);
        get("idio_walk_vol", c.idio_walk_vol);
        get("beta_multiplier", c.beta_multiplier);
        get("report_noise", c.report_noise);
        get("mobility_noise", c.mobility_noise);
        get("beta0_spread", c.beta0_spread);
        get("outcome", c.outcome);
        get("seed", c.seed);
        get("sigma", c.base.sigma);
        get("gamma", c.base.gamma);
        get("kappa", c.base.kappa);
        get("eta", c.base.eta);
        get("f", c.base.f);
        get("population", c.base.population);
        get("unit_names", c.unit_names);
        if (j.contains("start_date")) {
            c.start_date = factimp::parse_date(j["start_date"].get<std::string>());
        }
        if (j.contains("policy_days")) {
            c.policy_days = j["policy_days"].get<std::vector<int>>();
        } else {
            // default staggered schedule: latest units adopt, earliest day 28
            int n_treated = c.n_units * 7 / 10;
            if (j.contains("n_treated")) n_treated = j["n_treated"].get<int>();
            c.policy_days.assign(c.n_units, -1);
            for (int k = 0; k < std::min(n_treated, c.n_units - 1); ++k) {
                c.policy_days[c.n_units - 1 - k] = 28 + (k % 16);
            }
        }
    } catch (const json::exception& e) {
        throw factimp::ValidationError(std::string("simulate JSON: ") + e.what());
    }
    return c;
}

}  // namespace

extern "C" {

const char* factimp_version(void) { return "0.1.0"; }

const char* factimp_last_error(void) { return g_last_error.c_str(); }

void factimp_string_free(char* s) { std::free(s); }
void factimp_panel_free(factimp_panel* panel) { delete panel; }
void factimp_results_free(factimp_results* results) { delete results; }

factimp_status factimp_panel_load(const char* files_json, const char* config_json,
                                  factimp_panel** out) {
    if (!files_json || !out) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] {
        const factimp::LoadConfig files = factimp::load_config_from_json(files_json);
        const factimp::RunConfig config =
            factimp::run_config_from_json(config_json ? config_json : "{}");
        factimp::LoadResult loaded = factimp::load_panel(files, config);
        auto* p = new factimp_panel;
        p->data = std::move(loaded.panel);
        p->input_hashes = std::move(loaded.input_hashes);
        *out = p;
    });
}

factimp_status factimp_panel_simulate(const char* sim_json, factimp_panel** out) {
    if (!sim_json || !out) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] {
        const factimp::SeirPanelConfig cfg = sim_config_from_json(sim_json);
        factimp::SeirPanel sim = factimp::simulate_panel(cfg);
        auto* p = new factimp_panel;
        p->data = sim.panel;
        p->simulated = true;
        p->policy_days = cfg.policy_days;
        p->sim = std::move(sim);
        p->input_hashes["simulate"] = factimp::hash_string(sim_json);
        *out = p;
    });
}

factimp_status factimp_panel_save_csv(const factimp_panel* panel, const char* out_dir) {
    if (!panel || !out_dir) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] {
        if (!panel->simulated) {
            throw factimp::ValidationError("save_csv is only available for simulated panels");
        }
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw factimp::ValidationError("cannot create '" + std::string(out_dir) + "'");

        const factimp::SeirPanel& sim = panel->sim;
        const auto& units = panel->data.units;
        auto write_long = [&](const char* name, const factimp::Matrix& M) {
            std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
            f << "date,unit,value\n";
            for (int t = 0; t < M.rows(); ++t) {
                const std::string d = factimp::format_date(sim.series_start + t);
                for (int i = 0; i < M.cols(); ++i) {
                    f << d << ',' << factimp::csv_escape(units[i]) << ','
                      << factimp::format_double(M(t, i)) << '\n';
                }
            }
        };
        write_long("cases.csv", sim.cases);
        write_long("deaths.csv", sim.deaths);
        write_long("mobility.csv", sim.mobility);
        write_long("tests.csv", sim.tests);

        std::ofstream f(fs::path(out_dir) / "policy_timeline.csv", std::ios::binary);
        f << "unit,stay_home_announced,stay_home_effective\n";
        for (size_t i = 0; i < units.size(); ++i) {
            const int day = panel->policy_days[i];
            std::string date = "-";
            if (day >= 0 && day < panel->data.T()) {
                date = factimp::format_date(panel->data.start_date + day);
            }
            f << factimp::csv_escape(units[i]) << ',' << date << ',' << date << '\n';
        }
    });
}

factimp_status factimp_panel_info(const factimp_panel* panel, const char* config_json,
                                  char** json_out) {
    if (!panel || !json_out) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] {
        (void)config_json;
        const auto& d = panel->data;
        const factimp::BlockDecomposition blocks = factimp::decompose_blocks(d, true);
        json j;
        j["N"] = d.N();
        j["T"] = d.T();
        j["N0"] = blocks.N0();
        j["N1"] = blocks.N1();
        j["T0"] = blocks.t0_common;
        j["window"] = {factimp::format_date(d.start_date),
                       factimp::format_date(d.start_date + (d.T() - 1))};
        j["units"] = d.units;
        j["covariates"] = d.x_names;
        j["confounders"] = d.z_names;
        *json_out = dup_string(j.dump(2));
    });
}

factimp_status factimp_panel_validate(const factimp_panel* panel, const char* config_json,
                                      char** report_out) {
    if (!panel || !report_out) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    *report_out = nullptr;
    return guarded([&] {
        const factimp::RunConfig config =
            factimp::run_config_from_json(config_json ? config_json : "{}");
        const auto& d = panel->data;
        const factimp::BlockDecomposition blocks = factimp::decompose_blocks(d, true);
        const int K = static_cast<int>(d.X.size() + d.Z.size());
        const int r = config.r_fixed >= 0 ? config.r_fixed : 2;
        std::string text;
        text += "N=" + std::to_string(blocks.N) + " T=" + std::to_string(blocks.T) +
                " N0=" + std::to_string(blocks.N0()) + " N1=" + std::to_string(blocks.N1()) +
                " T0=" + std::to_string(blocks.t0_common) + "\n";
        try {
            const factimp::ValidityReport rep = factimp::validate_assumptions(blocks, r, K);
            text += "order condition TALL: " + std::to_string(rep.tall_lhs) + " > " +
                    std::to_string(rep.tall_rhs) + " ok\n";
            text += "order condition WIDE: " + std::to_string(rep.wide_lhs) + " > " +
                    std::to_string(rep.wide_rhs) + " ok\n";
            text += "sqrt(N)/min(N0,T0): " + factimp::format_double(rep.ratio_sqrt_n) + "\n";
            text += "sqrt(T)/min(N0,T0): " + factimp::format_double(rep.ratio_sqrt_t) + "\n";
            for (const auto& w : rep.warnings) text += "warning: " + w + "\n";
            *report_out = dup_string(text);
        } catch (const factimp::ValidationError& e) {
            text += std::string("error: ") + e.what() + "\n";
            *report_out = dup_string(text);
            throw;
        }
    });
}

factimp_status factimp_estimate(const factimp_panel* panel, const char* config_json,
                                factimp_results** out) {
    if (!panel || !out) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] {
        const factimp::RunConfig config =
            factimp::run_config_from_json(config_json ? config_json : "{}");
        auto* r = new factimp_results;
        try {
            r->bundle = factimp::run_estimation(panel->data, config, panel->input_hashes);
        } catch (...) {
            delete r;
            throw;
        }
        *out = r;
    });
}

factimp_status factimp_results_json(const factimp_results* results, char** json_out) {
    if (!results || !json_out) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] { *json_out = dup_string(factimp::results_to_json(results->bundle)); });
}

factimp_status factimp_results_export(const factimp_results* results, const char* out_dir,
                                      const char* formats) {
    if (!results || !out_dir) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] {
        std::vector<std::string> fmt;
        if (!formats) {
            fmt = {"csv", "plot"};
        } else {
            std::string s(formats);
            size_t pos = 0;
            while (pos != std::string::npos) {
                const size_t comma = s.find(',', pos);
                fmt.push_back(s.substr(pos, comma == std::string::npos ? comma : comma - pos));
                pos = comma == std::string::npos ? comma : comma + 1;
            }
        }
        factimp::export_results(results->bundle, out_dir, fmt);
    });
}

factimp_status factimp_montecarlo(const char* mc_json, char** report_out) {
    if (!mc_json || !report_out) return fail(FACTIMP_ERR_VALIDATION, "null argument");
    return guarded([&] {
        const factimp::McConfig cfg = factimp::mc_config_from_json(mc_json);
        const factimp::McReport report = factimp::run_monte_carlo(cfg);
        *report_out = dup_string(report.render());
    });
}

}  // extern "C"
