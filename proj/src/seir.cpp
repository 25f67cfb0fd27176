#include "seir.hpp"

#include <cmath>
#include <cstdio>

#include "errors.hpp"
#include "rng.hpp"

namespace factimp {

void check_stability(const SeirParams& p) {
    auto fail = [](const std::string& what) {
        throw ValidationError("SEIR stability violated: " + what);
    };
    if (!(p.sigma >= 0) || 2.0 * p.sigma > 1.0) fail("need 0 <= 2*sigma <= 1");
    if (!(p.gamma >= 0) || 2.0 * p.gamma > 1.0) fail("need 0 <= 2*gamma <= 1");
    if (!(p.kappa >= 0.0 && p.kappa <= 1.0)) fail("need kappa in [0,1]");
    if (!(p.eta >= 0.0) || (1.0 - p.kappa) * p.eta + p.kappa * p.eta > 1.0) {
        fail("need (1-kappa)*eta + kappa*eta <= 1");
    }
    if (!(p.f >= 0.0 && p.f <= 1.0)) fail("need f in [0,1]");
    if (!(p.population > 0.0)) fail("population must be positive");
}

SeirState seir_step(const SeirState& s, const SeirParams& p, double beta_t) {
    check_stability(p);
    if (!(beta_t >= 0.0)) throw ValidationError("beta_t must be non-negative");

    const double new_exposed = beta_t * s.S * (s.I1 + s.I2) / p.population;
    const double report_delay = std::exp(-p.gamma * p.kappa);

    SeirState n;
    n.S = s.S - new_exposed;
    n.E1 = s.E1 + (1.0 - p.f) * new_exposed - 2.0 * p.sigma * s.E1;
    n.E2 = s.E2 + 2.0 * p.sigma * s.E1 - 2.0 * p.sigma * s.E2;
    n.I1 = s.I1 + 2.0 * p.sigma * s.E2 - 2.0 * p.gamma * s.I1;
    n.I2 = s.I2 + 2.0 * p.gamma * s.I1 - 2.0 * p.gamma * s.I2;
    n.Q = s.Q + 2.0 * p.sigma * s.E2 * report_delay - p.kappa * s.Q;
    n.C = s.C + (1.0 - p.kappa) * p.eta * s.Q;
    n.D = s.D + p.kappa * p.eta * s.Q;

    n.E1j = s.E1j + p.f * new_exposed - 2.0 * p.sigma * s.E1j;
    n.E2j = s.E2j + 2.0 * p.sigma * s.E1j - 2.0 * p.sigma * s.E2j;
    n.I1j = s.I1j + 2.0 * p.sigma * s.E2j - 2.0 * p.gamma * s.I1j;
    n.I2j = s.I2j + 2.0 * p.gamma * s.I1j - 2.0 * p.gamma * s.I2j;
    n.Qj = s.Qj + 2.0 * p.sigma * s.E2j * report_delay - p.kappa * s.Qj;
    n.Cj = s.Cj + (1.0 - p.kappa) * p.eta * s.Qj;
    n.Dj = s.Dj + p.kappa * p.eta * s.Qj;
    return n;
}

std::vector<double> transmission_walk(double beta0, double step_volatility, int T,
                                      std::uint64_t seed) {
    if (!(beta0 > 0.0)) throw ValidationError("beta0 must be positive");
    if (step_volatility < 0.0) throw ValidationError("step volatility must be non-negative");
    std::vector<double> beta(T);
    if (T == 0) return beta;
    auto engine = make_engine(seed);
    std::normal_distribution<double> eps(0.0, 1.0);
    double log_beta = std::log(beta0);
    beta[0] = beta0;
    for (int t = 1; t < T; ++t) {
        log_beta += step_volatility * eps(engine);
        beta[t] = std::exp(log_beta);
    }
    return beta;
}

namespace {

enum StreamTag : std::uint64_t {
    kCommonWalk = 1,
    kIdioWalk = 2,
    kReportNoise = 3,
    kTestsNoise = 4,
    kBeta0 = 5,
};

}  // namespace

SeirPanel simulate_panel(const SeirPanelConfig& cfg) {
    if (cfg.n_units < 2) throw ValidationError("simulate_panel needs at least two states");
    if (static_cast<int>(cfg.policy_days.size()) != cfg.n_units) {
        throw ValidationError("policy schedule length must equal the unit count");
    }
    check_stability(cfg.base);

    const int history = std::max(cfg.lag_m, 8);  // growth needs 8 days, lags need m
    if (cfg.burn_in < history) {
        throw ValidationError("burn-in must cover at least max(lag, 8) = " +
                              std::to_string(history) + " days");
    }
    const int total = cfg.burn_in + cfg.T;   // simulated days per unit
    const int series_len = history + cfg.T;  // emitted raw series length
    const int emit_from = cfg.burn_in - history;

    SeirPanel out;
    out.series_start = cfg.start_date + (-history);
    out.cases = Matrix::Zero(series_len, cfg.n_units);
    out.deaths = Matrix::Zero(series_len, cfg.n_units);
    out.mobility = Matrix::Zero(series_len, cfg.n_units);
    out.tests = Matrix::Zero(series_len, cfg.n_units);

    const std::vector<double> common =
        transmission_walk(1.0, cfg.common_walk_vol, total, derive_seed(cfg.seed, kCommonWalk));

    for (int i = 0; i < cfg.n_units; ++i) {
        const std::vector<double> idio =
            transmission_walk(1.0, cfg.idio_walk_vol, total, derive_seed(cfg.seed, kIdioWalk, i));
        auto report_rng = make_engine(derive_seed(cfg.seed, kReportNoise, i));
        auto tests_rng = make_engine(derive_seed(cfg.seed, kTestsNoise, i));
        auto beta0_rng = make_engine(derive_seed(cfg.seed, kBeta0, i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double beta0_i = cfg.beta0 * std::exp(cfg.beta0_spread * gauss(beta0_rng));

        const int policy_abs =
            cfg.policy_days[i] >= 0 ? cfg.burn_in + cfg.policy_days[i] : total + 1;

        SeirState s;
        s.S = cfg.base.population - 1.0;
        s.I1 = 1.0;  // single infectious seed case in each origin
        double prev_c = 0.0, prev_d = 0.0;
        double cum_c_obs = 0.0, cum_d_obs = 0.0;
        // Stationary testing-intensity confounder: a state level plus an
        // AR(1) deviation. A trending confounder (e.g. raw test counts)
        // would hand the slope estimate an unbounded extrapolation lever.
        const double tests_level = gauss(tests_rng);
        double tests_ar = 0.0;
        for (int day = 0; day < total; ++day) {
            const double walk = beta0_i * common[day] * idio[day];
            const double beta =
                day >= policy_abs ? walk * cfg.beta_multiplier : walk;
            const SeirState next = seir_step(s, cfg.base, beta);

            // Observed increments carry multiplicative reporting noise; the
            // rebuilt cumulatives stay non-decreasing.
            const double inc_c = (next.C - prev_c) * std::exp(cfg.report_noise * gauss(report_rng));
            const double inc_d = (next.D - prev_d) * std::exp(cfg.report_noise * gauss(report_rng));
            prev_c = next.C;
            prev_d = next.D;
            cum_c_obs += inc_c;
            cum_d_obs += inc_d;

            tests_ar = 0.7 * tests_ar + 0.3 * gauss(tests_rng);
            const int row = day - emit_from;
            if (row >= 0) {
                out.cases(row, i) = cum_c_obs;
                out.deaths(row, i) = cum_d_obs;
                // Mobility tracks the un-multiplied walk: the covariate
                // measures the secular trend, not the policy channel, so the
                // planted beta reduction stays a treatment effect.
                out.mobility(row, i) = std::log(walk) + cfg.mobility_noise * gauss(tests_rng);
                out.tests(row, i) = tests_level + tests_ar;
            }
            s = next;
        }
    }

    PanelDataset panel;
    panel.start_date = cfg.start_date;
    panel.units.resize(cfg.n_units);
    for (int i = 0; i < cfg.n_units; ++i) {
        if (i < static_cast<int>(cfg.unit_names.size())) {
            panel.units[i] = cfg.unit_names[i];
        } else {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "S%02d", i + 1);
            panel.units[i] = buf;
        }
    }

    const Matrix& counts = cfg.outcome == "deaths" ? out.deaths : out.cases;
    panel.Y = Matrix::Constant(cfg.T, cfg.n_units, kMissing);
    for (int i = 0; i < cfg.n_units; ++i) {
        std::vector<double> cumulative(series_len);
        for (int t = 0; t < series_len; ++t) cumulative[t] = counts(t, i);
        const GrowthSeries g = compute_growth_rate(cumulative, 7);
        for (int t = 0; t < cfg.T; ++t) panel.Y(t, i) = g.values[history + t];
    }

    Matrix mob(cfg.T, cfg.n_units), tst(cfg.T, cfg.n_units);
    for (int t = 0; t < cfg.T; ++t) {
        mob.row(t) = out.mobility.row(history + t - cfg.lag_m);
        tst.row(t) = out.tests.row(history + t);
    }
    panel.X.push_back(mob);
    panel.x_names.push_back("mobility");
    panel.Z.push_back(tst);
    panel.z_names.push_back("tests");

    panel.D = Eigen::MatrixXi::Zero(cfg.T, cfg.n_units);
    for (int i = 0; i < cfg.n_units; ++i) {
        if (cfg.policy_days[i] >= 0) {
            for (int t = cfg.policy_days[i]; t < cfg.T; ++t) panel.D(t, i) = 1;
        }
    }
    panel.t0 = treatment_start_lengths(panel.D);
    out.panel = std::move(panel);
    return out;
}

}  // namespace factimp
