#include "pipeline.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "errors.hpp"
#include "ife.hpp"
#include "impute.hpp"

namespace factimp {

using nlohmann::json;

std::uint64_t fnv1a64(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

static std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string hash_string(const std::string& text) {
    return hex64(fnv1a64(text.data(), text.size()));
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "': " + std::strerror(errno));
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string s = buf.str();
    return hex64(fnv1a64(s.data(), s.size()));
}

namespace {

// ---------------------------------------------------------------- loading

struct LongSeries {
    // date serial -> value, with the source row for error messages
    std::map<int, std::pair<double, int>> by_date;
};

// Reads one long-format file (date, unit, value) into per-unit series.
std::map<std::string, LongSeries> read_long_csv(const std::string& path,
                                                const std::set<std::string>& known_units) {
    CsvTable table = read_csv(path);
    const int c_date = table.column("date");
    const int c_unit = table.column("unit");
    const int c_value = table.column("value");
    if (c_date < 0 || c_unit < 0 || c_value < 0) {
        throw ValidationError(path + ": expected header columns date, unit, value");
    }
    std::map<std::string, LongSeries> out;
    for (size_t k = 0; k < table.rows.size(); ++k) {
        const auto& row = table.rows[k];
        const int line = table.line[k];
        if (static_cast<int>(row.size()) <= std::max({c_date, c_unit, c_value})) {
            throw ValidationError(path + " row " + std::to_string(line) + ": too few fields");
        }
        const std::string& unit = row[c_unit];
        if (!known_units.empty() && !known_units.count(unit)) {
            throw ValidationError(path + " row " + std::to_string(line) + ": unknown unit code '" +
                                  unit + "'");
        }
        const Date d = parse_date(row[c_date]);
        const std::string& sval = row[c_value];
        if (sval.empty()) continue;  // blank value = not reported
        char* end = nullptr;
        const double v = std::strtod(sval.c_str(), &end);
        if (end == sval.c_str() || *end != '\0') {
            throw ValidationError(path + " row " + std::to_string(line) + ": non-numeric value '" +
                                  sval + "'");
        }
        auto [it, fresh] = out[unit].by_date.try_emplace(d.serial, std::make_pair(v, line));
        if (!fresh) {
            throw ValidationError(path + " row " + std::to_string(line) + ": duplicate (date, unit) key (" +
                                  row[c_date] + ", " + unit + "); first seen at row " +
                                  std::to_string(it->second.second));
        }
    }
    return out;
}

struct PolicyDates {
    std::map<std::string, Date> announced;  // absent = never
    std::vector<std::string> units;         // file order
};

PolicyDates read_policy_file(const std::string& path, const std::string& policy,
                             bool use_effective) {
    CsvTable table = read_csv(path);
    const int c_unit = table.column("unit");
    const std::string col = policy + (use_effective ? "_effective" : "_announced");
    const int c_date = table.column(col);
    if (c_unit < 0) throw ValidationError(path + ": missing 'unit' column");
    if (c_date < 0) {
        throw ValidationError(path + ": unknown policy column '" + col + "'");
    }
    PolicyDates out;
    std::set<std::string> seen;
    for (size_t k = 0; k < table.rows.size(); ++k) {
        const auto& row = table.rows[k];
        const int line = table.line[k];
        const std::string& unit = row[c_unit];
        if (!seen.insert(unit).second) {
            throw ValidationError(path + " row " + std::to_string(line) + ": duplicate unit '" +
                                  unit + "'");
        }
        out.units.push_back(unit);
        const std::string& sval = row[c_date];
        if (sval.empty() || sval == "-") continue;  // never treated
        out.announced[unit] = parse_date(sval);
    }
    if (out.units.empty()) throw ValidationError(path + ": no units listed");
    return out;
}

// Merges precedence-ordered sources into one cumulative series per unit on
// [from, to]; leading absence is tolerated (unit not yet reporting), gaps
// after the first report are hard errors.
Matrix merge_cumulative(const std::vector<std::string>& paths,
                        const std::vector<std::string>& units, Date from, Date to,
                        const std::string& what) {
    const int T = to - from + 1;
    const int N = static_cast<int>(units.size());
    std::set<std::string> known(units.begin(), units.end());
    std::vector<std::map<std::string, LongSeries>> sources;
    for (const auto& p : paths) sources.push_back(read_long_csv(p, known));

    Matrix out = Matrix::Constant(T, N, kMissing);
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            for (const auto& src : sources) {
                auto su = src.find(units[i]);
                if (su == src.end()) continue;
                auto sv = su->second.by_date.find(from.serial + t);
                if (sv != su->second.by_date.end()) {
                    out(t, i) = sv->second.first;
                    break;
                }
            }
        }
        int first = -1;
        for (int t = 0; t < T; ++t) {
            if (!is_missing(out(t, i))) {
                first = t;
                break;
            }
        }
        if (first < 0) continue;  // never reports; outcome stays missing
        for (int t = first + 1; t < T; ++t) {
            if (is_missing(out(t, i))) {
                throw ValidationError(what + ": unit '" + units[i] + "' has a reporting gap on " +
                                      format_date(from + t) + " (no source covers it)");
            }
            if (out(t, i) < out(t - 1, i)) {
                throw ValidationError(what + ": cumulative count for unit '" + units[i] +
                                      "' decreases on " + format_date(from + t));
            }
        }
    }
    return out;
}

// Covariates must cover the window for every unit; history rows before the
// window are used when present and masked when absent.
Matrix merge_covariate(const std::string& path, const std::vector<std::string>& units, Date from,
                       Date window_start, Date to) {
    const int T = to - from + 1;
    const int N = static_cast<int>(units.size());
    std::set<std::string> known(units.begin(), units.end());
    auto src = read_long_csv(path, known);
    Matrix out = Matrix::Constant(T, N, kMissing);
    for (int i = 0; i < N; ++i) {
        auto su = src.find(units[i]);
        for (int t = 0; t < T; ++t) {
            const Date d = from + t;
            if (su != src.end()) {
                auto sv = su->second.by_date.find(d.serial);
                if (sv != su->second.by_date.end()) {
                    out(t, i) = sv->second.first;
                    continue;
                }
            }
            if (d >= window_start) {
                throw ValidationError(path + ": missing date " + format_date(d) + " for unit '" +
                                      units[i] + "' inside the estimation window");
            }
        }
    }
    return out;
}

std::string basename_no_ext(const std::string& path) {
    std::filesystem::path p(path);
    return p.stem().string();
}

}  // namespace

LoadResult load_panel(const LoadConfig& files, const RunConfig& config) {
    if (files.policy_file.empty()) throw ValidationError("a policy timeline file is required");
    if (!(config.window_start < config.window_end)) {
        throw ValidationError("window start must precede window end");
    }
    const int m = config.effective_lag();
    const Date ws = config.window_start;
    const Date we = config.window_end;
    const int T = we - ws + 1;
    if (m >= T) {
        throw ValidationError("lag " + std::to_string(m) + " is not smaller than the window length " +
                              std::to_string(T));
    }

    PolicyDates policy = read_policy_file(files.policy_file, config.policy, config.use_effective_date);
    const std::vector<std::string>& units = policy.units;
    const int N = static_cast<int>(units.size());

    const std::vector<std::string>& primary =
        config.outcome == "deaths" ? files.death_files : files.case_files;
    if (primary.empty()) {
        throw ValidationError("no cumulative " + config.outcome + " source files were given");
    }

    // Growth at the first window day needs 8 days of history.
    const Date cum_from = ws + (-8);
    Matrix cumulative = merge_cumulative(primary, units, cum_from, we, config.outcome);

    LoadResult result;
    PanelDataset& panel = result.panel;
    panel.units = units;
    panel.start_date = ws;
    panel.Y = Matrix::Constant(T, N, kMissing);
    for (int i = 0; i < N; ++i) {
        std::vector<double> series(cumulative.rows());
        for (int t = 0; t < cumulative.rows(); ++t) series[t] = cumulative(t, i);
        const GrowthSeries g = compute_growth_rate(series, 7);
        for (int t = 0; t < T; ++t) panel.Y(t, i) = g.values[8 + t];
    }

    // The raw grid starts m days before the window, so raw row t already
    // holds the value dated (ws + t) - m.
    const Date cov_from = ws + (-m);
    for (const auto& path : files.covariate_files) {
        Matrix raw = merge_covariate(path, units, cov_from, ws, we);
        panel.X.push_back(raw.topRows(T));
        panel.x_names.push_back(basename_no_ext(path));
    }
    for (const auto& path : files.confounder_files) {
        Matrix raw = merge_covariate(path, units, ws, ws, we);
        panel.Z.push_back(raw);
        panel.z_names.push_back(basename_no_ext(path));
    }

    panel.D = Eigen::MatrixXi::Zero(T, N);
    for (int i = 0; i < N; ++i) {
        auto it = policy.announced.find(units[i]);
        if (it == policy.announced.end()) continue;
        const int day = it->second - ws;
        for (int t = std::max(day, 0); t < T; ++t) panel.D(t, i) = 1;
    }
    panel.t0 = treatment_start_lengths(panel.D);
    validate_dataset(panel);

    for (const auto& p : primary) result.input_hashes[p] = hash_file(p);
    for (const auto& p : files.covariate_files) result.input_hashes[p] = hash_file(p);
    for (const auto& p : files.confounder_files) result.input_hashes[p] = hash_file(p);
    result.input_hashes[files.policy_file] = hash_file(files.policy_file);
    return result;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(name) + ": " + e.what());
    } catch (const ComputationError& e) {
        throw ComputationError(std::string(name) + ": " + e.what());
    }
}

std::vector<AttRow> to_rows(const std::vector<double>& series, const std::vector<int>& counts,
                            const InferenceResult& inf) {
    std::vector<AttRow> rows;
    for (size_t s = 0; s < series.size(); ++s) {
        if (is_missing(series[s]) || is_missing(inf.se[s])) continue;
        AttRow row;
        row.event_time = static_cast<int>(s);
        row.estimate = series[s];
        row.se = inf.se[s];
        row.ci_lo = inf.ci_lower[s];
        row.ci_hi = inf.ci_upper[s];
        row.n_units = counts[s];
        rows.push_back(row);
    }
    return rows;
}

Matrix submatrix(const Matrix& M, const std::vector<int>& cols) {
    Matrix out(M.rows(), cols.size());
    for (size_t j = 0; j < cols.size(); ++j) out.col(j) = M.col(cols[j]);
    return out;
}

}  // namespace

ResultsBundle run_estimation(const PanelDataset& panel, const RunConfig& config,
                             const std::map<std::string, std::string>& input_hashes) {
    ResultsBundle bundle;
    bundle.input_hashes = input_hashes;
    bundle.config_hash = hash_string(run_config_to_json(config));

    const BlockDecomposition blocks = stage("blocks", [&] { return decompose_blocks(panel); });
    bundle.N = blocks.N;
    bundle.T = blocks.T;
    bundle.N0 = blocks.N0();
    bundle.N1 = blocks.N1();
    bundle.T0 = blocks.t0_common;

    // Resolve group definitions against the panel's unit names.
    std::vector<GroupDef> groups;
    for (const auto& [name, members] : config.groups) {
        GroupDef g;
        g.name = name;
        for (const auto& unit : members) {
            auto it = std::find(panel.units.begin(), panel.units.end(), unit);
            if (it == panel.units.end()) {
                throw ValidationError("groups: unknown unit '" + unit + "' in group '" + name + "'");
            }
            g.units.push_back(static_cast<int>(it - panel.units.begin()));
        }
        groups.push_back(std::move(g));
    }

    const int K = static_cast<int>(panel.X.size() + panel.Z.size());
    std::vector<Matrix> X0, Z0;
    for (const auto& x : panel.X) X0.push_back(submatrix(x, blocks.control_units));
    for (const auto& z : panel.Z) Z0.push_back(submatrix(z, blocks.control_units));
    const Matrix Y0 = submatrix(panel.Y, blocks.control_units);

    IfeOptions opts;
    opts.tol = config.tol;
    opts.max_iter = config.max_iter;

    // Factor count: fixed by the user, or selected once on the residuals of
    // the factorless fit, before the iterative estimation.
    int r = config.r_fixed;
    if (r < 0) {
        stage("select_r", [&] {
            const IfeFit pre = fit_ife(Y0, X0, Z0, 0, opts);
            const Matrix R = residualize(panel.Y, panel.X, panel.Z, pre.beta, pre.gamma);
            std::vector<int> tall_rows, wide_rows;
            for (int t = 0; t < blocks.T; ++t) {
                bool ctrl_ok = true, all_ok = true;
                for (int i = 0; i < blocks.N; ++i) {
                    const bool miss = is_missing(R(t, i));
                    if (miss) all_ok = false;
                    if (miss && blocks.is_control(i)) ctrl_ok = false;
                }
                if (ctrl_ok) tall_rows.push_back(t);
                if (all_ok && t < blocks.t0_common) wide_rows.push_back(t);
            }
            Matrix tall(tall_rows.size(), blocks.N0());
            for (size_t a = 0; a < tall_rows.size(); ++a)
                for (int b = 0; b < blocks.N0(); ++b)
                    tall(a, b) = R(tall_rows[a], blocks.control_units[b]);
            Matrix wide(wide_rows.size(), blocks.N);
            for (size_t a = 0; a < wide_rows.size(); ++a)
                for (int b = 0; b < blocks.N; ++b) wide(a, b) = R(wide_rows[a], b);
            int r_max = config.r_max;
            if (r_max < 0) {
                r_max = default_r_max(static_cast<int>(wide.rows()),
                                      std::min<int>(blocks.N0(), tall.rows()));
            }
            const RSelection sel = select_r(tall, wide, r_max, config.ic_penalty);
            bundle.r_tall = sel.r_tall;
            bundle.r_wide = sel.r_wide;
            bundle.r_selected = true;
            r = sel.r;
            return 0;
        });
    }
    bundle.r = r;

    bundle.validity = stage("validate_assumptions", [&] { return validate_assumptions(blocks, r, K); });
    for (const auto& w : bundle.validity.warnings) bundle.warnings.push_back(w);

    const IfeFit fit = stage("fit_ife", [&] { return fit_ife(Y0, X0, Z0, r, opts); });
    bundle.converged = fit.converged;
    bundle.iterations = fit.iterations;
    bundle.beta = fit.beta;
    bundle.gamma = fit.gamma;
    if (!fit.converged) {
        bundle.warnings.push_back("interactive-fixed-effects fit did not converge in " +
                                  std::to_string(fit.iterations) + " iterations");
    }

    const ImputedPanel imputed =
        stage("impute", [&] { return impute_counterfactuals(panel, blocks, fit, r); });
    for (const auto& w : imputed.warnings) bundle.warnings.push_back(w);

    const EffectsBundle effects =
        stage("effects", [&] { return compute_effects(panel, imputed, blocks, groups); });
    bundle.delta = effects.delta;

    const InferenceResult att = stage("inference", [&] {
        return att_inference(effects, imputed, blocks, config.ci_level);
    });
    bundle.att = to_rows(effects.theta_t, effects.theta_t_count, att);
    bundle.sigma_e2 = att.sigma_e2;
    bundle.dof = att.dof;
    bundle.theta_bar = att.theta_bar;
    bundle.theta_bar_se = att.theta_bar_se;

    for (const auto& g : groups) {
        const InferenceResult gi = stage("inference", [&] {
            return group_inference(effects, imputed, blocks, g, config.ci_level);
        });
        bundle.groups[g.name] =
            to_rows(effects.theta_jt.at(g.name), effects.theta_jt_count.at(g.name), gi);
        bundle.group_theta_bar[g.name] = gi.theta_bar;
        bundle.group_theta_bar_se[g.name] = gi.theta_bar_se;
    }
    return bundle;
}

namespace {

std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char c : name) {
        out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
    }
    return out.empty() ? "group" : out;
}

void write_file(const std::string& path, const std::string& content,
                std::vector<std::string>& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "': " + std::strerror(errno));
    out << content;
    if (!out) throw ValidationError("write failed for '" + path + "'");
    manifest.push_back(path);
}

std::string render_rows(const std::vector<AttRow>& rows, bool plot) {
    std::string s = plot ? "event_time,estimate,ci_lo,ci_hi\n"
                         : "event_time,estimate,se,ci_lo,ci_hi,n_units\n";
    for (const auto& row : rows) {
        s += std::to_string(row.event_time);
        s += ',' + format_double(row.estimate);
        if (!plot) s += ',' + format_double(row.se);
        s += ',' + format_double(row.ci_lo);
        s += ',' + format_double(row.ci_hi);
        if (!plot) s += ',' + std::to_string(row.n_units);
        s += '\n';
    }
    return s;
}

}  // namespace

std::vector<std::string> export_results(const ResultsBundle& bundle, const std::string& out_dir,
                                        const std::vector<std::string>& formats) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + out_dir + "': " + ec.message());
    const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
    const bool plot = std::find(formats.begin(), formats.end(), "plot") != formats.end();

    std::vector<std::string> manifest;
    const std::filesystem::path dir(out_dir);
    if (csv) {
        write_file((dir / "att.csv").string(), render_rows(bundle.att, false), manifest);
        for (const auto& [name, rows] : bundle.groups) {
            write_file((dir / ("group_" + sanitize_name(name) + ".csv")).string(),
                       render_rows(rows, false), manifest);
        }
        std::string diag;
        diag += "panel: N=" + std::to_string(bundle.N) + " T=" + std::to_string(bundle.T) +
                " N0=" + std::to_string(bundle.N0) + " N1=" + std::to_string(bundle.N1) +
                " T0=" + std::to_string(bundle.T0) + "\n";
        diag += "r: " + std::to_string(bundle.r) +
                (bundle.r_selected ? " (selected; r_tall=" + std::to_string(bundle.r_tall) +
                                         ", r_wide=" + std::to_string(bundle.r_wide) + ")"
                                   : " (fixed)") +
                "\n";
        diag += "converged: " + std::string(bundle.converged ? "true" : "false") +
                " after " + std::to_string(bundle.iterations) + " iterations\n";
        diag += "beta:";
        for (int k = 0; k < bundle.beta.size(); ++k) diag += ' ' + format_double(bundle.beta[k]);
        diag += "\ngamma:";
        for (int k = 0; k < bundle.gamma.size(); ++k) diag += ' ' + format_double(bundle.gamma[k]);
        diag += "\nsigma_e2: " + format_double(bundle.sigma_e2) +
                " (dof " + std::to_string(bundle.dof) + ")\n";
        diag += "delta: " + format_double(bundle.delta) + "\n";
        diag += "theta_bar: " + format_double(bundle.theta_bar) + " (se " +
                format_double(bundle.theta_bar_se) + ")\n";
        for (const auto& [name, v] : bundle.group_theta_bar) {
            diag += "theta_bar[" + name + "]: " + format_double(v) + " (se " +
                    format_double(bundle.group_theta_bar_se.at(name)) + ")\n";
        }
        diag += "order condition TALL: " + std::to_string(bundle.validity.tall_lhs) + " > " +
                std::to_string(bundle.validity.tall_rhs) + "\n";
        diag += "order condition WIDE: " + std::to_string(bundle.validity.wide_lhs) + " > " +
                std::to_string(bundle.validity.wide_rhs) + "\n";
        diag += "sqrt(N)/min(N0,T0): " + format_double(bundle.validity.ratio_sqrt_n) + "\n";
        diag += "sqrt(T)/min(N0,T0): " + format_double(bundle.validity.ratio_sqrt_t) + "\n";
        diag += "config_hash: " + bundle.config_hash + "\n";
        for (const auto& [path, h] : bundle.input_hashes) {
            diag += "input: " + h + "  " + path + "\n";
        }
        for (const auto& w : bundle.warnings) diag += "warning: " + w + "\n";
        write_file((dir / "diagnostics.txt").string(), diag, manifest);
    }
    if (plot) {
        write_file((dir / "att_plot.csv").string(), render_rows(bundle.att, true), manifest);
        for (const auto& [name, rows] : bundle.groups) {
            write_file((dir / ("group_" + sanitize_name(name) + "_plot.csv")).string(),
                       render_rows(rows, true), manifest);
        }
    }
    return manifest;
}

// ------------------------------------------------------------------ JSON

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config JSON: ") + e.what());
    }
    RunConfig c;
    try {
        if (j.contains("outcome")) c.outcome = j["outcome"].get<std::string>();
        if (c.outcome != "cases" && c.outcome != "deaths") {
            throw ValidationError("outcome must be 'cases' or 'deaths'");
        }
        if (j.contains("lag_m")) c.lag_m = j["lag_m"].get<int>();
        if (j.contains("policy")) c.policy = j["policy"].get<std::string>();
        if (j.contains("use_effective_date")) c.use_effective_date = j["use_effective_date"].get<bool>();
        if (j.contains("window")) {
            c.window_start = parse_date(j["window"][0].get<std::string>());
            c.window_end = parse_date(j["window"][1].get<std::string>());
        }
        if (j.contains("r")) {
            if (j["r"].is_string()) {
                if (j["r"] != "auto") throw ValidationError("r must be 'auto' or an integer");
                c.r_fixed = -1;
            } else {
                c.r_fixed = j["r"].get<int>();
                if (c.r_fixed < 0) throw ValidationError("fixed r must be non-negative");
            }
        }
        if (j.contains("r_max")) c.r_max = j["r_max"].get<int>();
        if (j.contains("ic_penalty")) {
            const std::string p = j["ic_penalty"].get<std::string>();
            if (p == "p1") c.ic_penalty = IcPenalty::p1;
            else if (p == "p2") c.ic_penalty = IcPenalty::p2;
            else throw ValidationError("ic_penalty must be 'p1' or 'p2'");
        }
        if (j.contains("ci_level")) c.ci_level = j["ci_level"].get<double>();
        if (!(c.ci_level > 0.0 && c.ci_level < 1.0)) {
            throw ValidationError("ci_level must be in (0,1)");
        }
        if (j.contains("groups")) {
            for (auto it = j["groups"].begin(); it != j["groups"].end(); ++it) {
                std::vector<std::string> members = it.value().get<std::vector<std::string>>();
                c.groups.emplace_back(it.key(), std::move(members));
            }
        }
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("tol")) c.tol = j["tol"].get<double>();
        if (j.contains("max_iter")) c.max_iter = j["max_iter"].get<int>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config JSON: ") + e.what());
    }
    if (c.lag_m < -1) throw ValidationError("lag_m must be non-negative");
    return c;
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["outcome"] = c.outcome;
    j["lag_m"] = c.effective_lag();
    j["policy"] = c.policy;
    j["use_effective_date"] = c.use_effective_date;
    j["window"] = {format_date(c.window_start), format_date(c.window_end)};
    if (c.r_fixed >= 0) j["r"] = c.r_fixed;
    else j["r"] = "auto";
    j["r_max"] = c.r_max;
    j["ic_penalty"] = c.ic_penalty == IcPenalty::p1 ? "p1" : "p2";
    j["ci_level"] = c.ci_level;
    json groups = json::object();
    for (const auto& [name, members] : c.groups) groups[name] = members;
    j["groups"] = groups;
    j["seed"] = c.seed;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    return j.dump();
}

LoadConfig load_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("files JSON: ") + e.what());
    }
    LoadConfig c;
    try {
        auto grab = [&](const char* key, std::vector<std::string>& into) {
            if (!j.contains(key)) return;
            if (j[key].is_string()) into.push_back(j[key].get<std::string>());
            else into = j[key].get<std::vector<std::string>>();
        };
        grab("cases", c.case_files);
        grab("deaths", c.death_files);
        grab("covariates", c.covariate_files);
        grab("confounders", c.confounder_files);
        if (j.contains("policy")) c.policy_file = j["policy"].get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("files JSON: ") + e.what());
    }
    return c;
}

std::string results_to_json(const ResultsBundle& bundle) {
    json j;
    auto rows = [](const std::vector<AttRow>& rs) {
        json arr = json::array();
        for (const auto& r : rs) {
            arr.push_back({{"event_time", r.event_time},
                           {"estimate", r.estimate},
                           {"se", r.se},
                           {"ci_lo", r.ci_lo},
                           {"ci_hi", r.ci_hi},
                           {"n_units", r.n_units}});
        }
        return arr;
    };
    j["att"] = rows(bundle.att);
    json groups = json::object();
    for (const auto& [name, rs] : bundle.groups) groups[name] = rows(rs);
    j["groups"] = groups;
    j["theta_bar"] = bundle.theta_bar;
    j["theta_bar_se"] = bundle.theta_bar_se;
    j["diagnostics"] = {{"N", bundle.N},       {"T", bundle.T},
                        {"N0", bundle.N0},     {"N1", bundle.N1},
                        {"T0", bundle.T0},     {"r", bundle.r},
                        {"r_tall", bundle.r_tall}, {"r_wide", bundle.r_wide},
                        {"r_selected", bundle.r_selected},
                        {"converged", bundle.converged},
                        {"iterations", bundle.iterations},
                        {"sigma_e2", bundle.sigma_e2},
                        {"dof", bundle.dof},
                        {"delta", bundle.delta}};
    json beta = json::array(), gamma = json::array();
    for (int k = 0; k < bundle.beta.size(); ++k) beta.push_back(bundle.beta[k]);
    for (int k = 0; k < bundle.gamma.size(); ++k) gamma.push_back(bundle.gamma[k]);
    j["beta"] = beta;
    j["gamma"] = gamma;
    j["warnings"] = bundle.warnings;
    j["config_hash"] = bundle.config_hash;
    j["input_hashes"] = bundle.input_hashes;
    return j.dump(2);
}

}  // namespace factimp
