// Command-line front end. Talks to the estimation core exclusively through
// the C API in factimp/factimp.h; flags are assembled into the JSON
// configuration documents the library consumes.

#include <cstdio>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "factimp/factimp.h"

using nlohmann::json;

namespace {

struct PanelHandle {
    factimp_panel* p = nullptr;
    ~PanelHandle() { factimp_panel_free(p); }
};
struct ResultsHandle {
    factimp_results* r = nullptr;
    ~ResultsHandle() { factimp_results_free(r); }
};
struct StringHandle {
    char* s = nullptr;
    ~StringHandle() { factimp_string_free(s); }
};

int report_error(factimp_status status) {
    std::fprintf(stderr, "error: %s\n", factimp_last_error());
    return static_cast<int>(status);
}

std::string default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("FACTIMP_OUTPUT_DIR")) return env;
    return ".";
}

// Shared estimation flags -> RunConfig JSON.
struct EstimationFlags {
    std::string outcome = "cases";
    int lag_m = -1;
    std::string policy = "stay_home";
    bool effective_date = false;
    std::string window_start = "2020-02-20";
    std::string window_end = "2020-04-20";
    std::string r = "auto";
    int r_max = -1;
    std::string ic_penalty = "p2";
    double ci_level = 0.95;
    std::vector<std::string> groups;  // "name=UnitA;UnitB"
    std::uint64_t seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--outcome", outcome, "Outcome series: cases or deaths")
            ->check(CLI::IsMember({"cases", "deaths"}));
        cmd->add_option("--lag", lag_m, "Covariate lag in days (default 14 cases / 21 deaths)");
        cmd->add_option("--policy", policy, "Policy column prefix in the timeline file");
        cmd->add_flag("--effective-date", effective_date,
                      "Treat from the effective date instead of the announcement date");
        cmd->add_option("--window-start", window_start, "First day of the window (YYYY-MM-DD)");
        cmd->add_option("--window-end", window_end, "Last day of the window (YYYY-MM-DD)");
        cmd->add_option("--r", r, "Factor count: 'auto' or a fixed integer");
        cmd->add_option("--r-max", r_max, "Cap for the factor-count search");
        cmd->add_option("--ic-penalty", ic_penalty, "Information criterion penalty: p1 or p2")
            ->check(CLI::IsMember({"p1", "p2"}));
        cmd->add_option("--ci-level", ci_level, "Confidence level (default 0.95)");
        cmd->add_option("--group", groups,
                        "Named unit group, e.g. --group top=California;Washington (repeatable)");
        cmd->add_option("--seed", seed, "Master seed");
    }

    std::string to_json() const {
        json j;
        j["outcome"] = outcome;
        if (lag_m >= 0) j["lag_m"] = lag_m;
        j["policy"] = policy;
        j["use_effective_date"] = effective_date;
        j["window"] = {window_start, window_end};
        if (r == "auto") j["r"] = "auto";
        else j["r"] = std::stoi(r);
        if (r_max >= 0) j["r_max"] = r_max;
        j["ic_penalty"] = ic_penalty;
        j["ci_level"] = ci_level;
        json g = json::object();
        for (const auto& spec : groups) {
            const size_t eq = spec.find('=');
            if (eq == std::string::npos) {
                throw CLI::ValidationError("--group", "expected name=UnitA;UnitB");
            }
            json members = json::array();
            std::string rest = spec.substr(eq + 1);
            size_t pos = 0;
            while (pos != std::string::npos) {
                const size_t semi = rest.find(';', pos);
                members.push_back(rest.substr(pos, semi == std::string::npos ? semi : semi - pos));
                pos = semi == std::string::npos ? semi : semi + 1;
            }
            g[spec.substr(0, eq)] = members;
        }
        j["groups"] = g;
        j["seed"] = seed;
        return j.dump();
    }
};

struct FileFlags {
    std::vector<std::string> cases, deaths, covariates, confounders;
    std::string policy_file;

    void attach(CLI::App* cmd, bool cases_required) {
        auto* c = cmd->add_option("--cases", cases,
                                  "Cumulative case CSVs in precedence order (date,unit,value)");
        cmd->add_option("--deaths", deaths, "Cumulative death CSVs in precedence order");
        cmd->add_option("--covariate", covariates,
                        "Lagged behavioral covariate CSV (repeatable, e.g. mobility)");
        cmd->add_option("--confounder", confounders,
                        "Contemporaneous confounder CSV (repeatable, e.g. tests)");
        cmd->add_option("--policy-file", policy_file, "Policy timeline CSV")->required();
        if (cases_required) c->required();
    }

    std::string to_json() const {
        json j;
        j["cases"] = cases;
        j["deaths"] = deaths;
        j["covariates"] = covariates;
        j["confounders"] = confounders;
        j["policy"] = policy_file;
        return j.dump();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Treatment-effect estimation on staggered-adoption panels via "
                 "factor-based counterfactual imputation"};
    app.require_subcommand(1);

    // ------------------------------------------------------------ estimate
    auto* estimate = app.add_subcommand("estimate", "Run the full estimation pipeline on CSV data");
    EstimationFlags est_flags;
    FileFlags est_files;
    std::string est_out;
    std::string est_formats = "csv,plot";
    bool est_print_json = false;
    est_files.attach(estimate, false);
    est_flags.attach(estimate);
    estimate->add_option("--out-dir", est_out, "Output directory (or FACTIMP_OUTPUT_DIR)");
    estimate->add_option("--formats", est_formats, "Comma-separated outputs: csv,plot");
    estimate->add_flag("--json", est_print_json, "Print the results bundle as JSON to stdout");

    // ------------------------------------------------------------ simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic SEIR panel as CSV files");
    int sim_units = 55, sim_days = 61, sim_burn_in = 70, sim_lag = 14, sim_treated = 39;
    double sim_beta0 = 0.5, sim_multiplier = 1.0, sim_noise = 0.12;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    simulate->add_option("--units", sim_units, "Number of states");
    simulate->add_option("--days", sim_days, "Panel window length in days");
    simulate->add_option("--burn-in", sim_burn_in, "Burn-in days before the window");
    simulate->add_option("--lag", sim_lag, "Mobility lag baked into the panel");
    simulate->add_option("--treated", sim_treated, "Number of treated states");
    simulate->add_option("--beta0", sim_beta0, "Baseline transmission rate");
    simulate->add_option("--multiplier", sim_multiplier,
                         "Post-policy transmission multiplier (planted effect)");
    simulate->add_option("--report-noise", sim_noise, "Reporting noise sd on daily increments");
    simulate->add_option("--seed", sim_seed, "Master seed");
    simulate->add_option("--out-dir", sim_out, "Output directory (or FACTIMP_OUTPUT_DIR)");

    // ---------------------------------------------------------- montecarlo
    auto* montecarlo = app.add_subcommand("montecarlo", "Monte Carlo validation study");
    std::string mc_config_file, mc_out;
    std::string mc_dgp = "linear";
    int mc_reps = 100, mc_threads = 0;
    std::uint64_t mc_seed = 1;
    double mc_theta = -0.098;
    montecarlo->add_option("--config", mc_config_file, "Full study configuration JSON file");
    montecarlo->add_option("--dgp", mc_dgp, "Data-generating process: linear or seir")
        ->check(CLI::IsMember({"linear", "seir"}));
    montecarlo->add_option("--reps", mc_reps, "Replication count");
    montecarlo->add_option("--seed", mc_seed, "Master seed");
    montecarlo->add_option("--theta", mc_theta, "Planted effect (linear DGP)");
    montecarlo->add_option("--threads", mc_threads, "Worker threads (0 = auto)");
    montecarlo->add_option("--out", mc_out, "Write the report to this file as well");

    // ------------------------------------------------------------ validate
    auto* validate = app.add_subcommand("validate", "Check data contracts and order conditions");
    EstimationFlags val_flags;
    FileFlags val_files;
    val_files.attach(validate, false);
    val_flags.attach(validate);

    CLI11_PARSE(app, argc, argv);

    if (estimate->parsed()) {
        PanelHandle panel;
        factimp_status st =
            factimp_panel_load(est_files.to_json().c_str(), est_flags.to_json().c_str(), &panel.p);
        if (st != FACTIMP_OK) return report_error(st);
        ResultsHandle results;
        st = factimp_estimate(panel.p, est_flags.to_json().c_str(), &results.r);
        if (st != FACTIMP_OK) return report_error(st);
        const std::string dir = default_out_dir(est_out);
        st = factimp_results_export(results.r, dir.c_str(), est_formats.c_str());
        if (st != FACTIMP_OK) return report_error(st);
        if (est_print_json) {
            StringHandle s;
            if (factimp_results_json(results.r, &s.s) == FACTIMP_OK) std::printf("%s\n", s.s);
        }
        std::printf("results written to %s\n", dir.c_str());
        return 0;
    }

    if (simulate->parsed()) {
        json j;
        j["n_units"] = sim_units;
        j["T"] = sim_days;
        j["burn_in"] = sim_burn_in;
        j["lag_m"] = sim_lag;
        j["n_treated"] = sim_treated;
        j["beta0"] = sim_beta0;
        j["beta_multiplier"] = sim_multiplier;
        j["report_noise"] = sim_noise;
        j["seed"] = sim_seed;
        PanelHandle panel;
        factimp_status st = factimp_panel_simulate(j.dump().c_str(), &panel.p);
        if (st != FACTIMP_OK) return report_error(st);
        const std::string dir = default_out_dir(sim_out);
        st = factimp_panel_save_csv(panel.p, dir.c_str());
        if (st != FACTIMP_OK) return report_error(st);
        std::printf("synthetic panel written to %s\n", dir.c_str());
        return 0;
    }

    if (montecarlo->parsed()) {
        std::string config_json;
        if (!mc_config_file.empty()) {
            std::FILE* f = std::fopen(mc_config_file.c_str(), "rb");
            if (!f) {
                std::fprintf(stderr, "error: cannot open %s\n", mc_config_file.c_str());
                return 1;
            }
            char buf[4096];
            size_t n;
            while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) config_json.append(buf, n);
            std::fclose(f);
        } else {
            json j;
            j["dgp"] = mc_dgp;
            j["reps"] = mc_reps;
            j["seed"] = mc_seed;
            j["threads"] = mc_threads;
            j["linear"] = {{"theta", mc_theta}};
            j["estimation"] = {{"r", "auto"}};
            config_json = j.dump();
        }
        StringHandle report;
        const factimp_status st = factimp_montecarlo(config_json.c_str(), &report.s);
        if (st != FACTIMP_OK) return report_error(st);
        std::printf("%s", report.s);
        if (!mc_out.empty()) {
            std::FILE* f = std::fopen(mc_out.c_str(), "wb");
            if (!f) {
                std::fprintf(stderr, "error: cannot write %s\n", mc_out.c_str());
                return 1;
            }
            std::fwrite(report.s, 1, std::strlen(report.s), f);
            std::fclose(f);
        }
        return 0;
    }

    if (validate->parsed()) {
        PanelHandle panel;
        factimp_status st =
            factimp_panel_load(val_files.to_json().c_str(), val_flags.to_json().c_str(), &panel.p);
        if (st != FACTIMP_OK) return report_error(st);
        StringHandle report;
        st = factimp_panel_validate(panel.p, val_flags.to_json().c_str(), &report.s);
        if (report.s) std::printf("%s", report.s);
        if (st != FACTIMP_OK) {
            std::fprintf(stderr, "error: %s\n", factimp_last_error());
            return static_cast<int>(st);
        }
        return 0;
    }
    return 0;
}
