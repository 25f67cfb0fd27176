#include "dgp.hpp"

#include <cmath>
#include <cstdio>

#include "errors.hpp"
#include "rng.hpp"

namespace factimp {

LinearDgpDraw draw_linear_factor_panel(const LinearDgpConfig& cfg, std::uint64_t seed) {
    const int N = cfg.N, T = cfg.T, N0 = cfg.N0, r = cfg.r;
    if (N0 <= 0 || N0 >= N) throw ValidationError("need 0 < N0 < N");
    const int n1 = N - N0;
    if (cfg.group_size > n1) throw ValidationError("group larger than the treated set");

    auto engine = make_engine(derive_seed(seed, 11));
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix F(T, r), Lambda(N, r);
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < r; ++k) F(t, k) = gauss(engine);
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < r; ++k) Lambda(i, k) = cfg.loading_mean + gauss(engine);

    LinearDgpDraw draw;
    PanelDataset& panel = draw.panel;
    panel.start_date = Date{days_from_civil(2020, 2, 20)};
    panel.units.resize(N);
    for (int i = 0; i < N; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "U%02d", i + 1);
        panel.units[i] = buf;
    }

    Matrix X(T, N), Z(T, N);
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) {
            X(t, i) = gauss(engine);
            Z(t, i) = gauss(engine);
        }

    // Staggered schedule: the group (if any) shares one day, the remaining
    // treated units cycle over the configured range.
    panel.D = Eigen::MatrixXi::Zero(T, N);
    draw.group_units.clear();
    const int span = std::max(1, cfg.last_policy_day - cfg.first_policy_day + 1);
    int spread_idx = 0;
    for (int i = N0; i < N; ++i) {
        int day;
        if (static_cast<int>(draw.group_units.size()) < cfg.group_size) {
            day = cfg.group_policy_day;
            draw.group_units.push_back(i);
        } else {
            day = cfg.first_policy_day + (spread_idx % span);
            ++spread_idx;
        }
        for (int t = day; t < T; ++t) panel.D(t, i) = 1;
    }
    panel.t0 = treatment_start_lengths(panel.D);

    Matrix E(T, N);
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) E(t, i) = cfg.sigma_e * gauss(engine);
    if (cfg.group_size > 0 && cfg.group_shock_rho > 0.0) {
        const double rho = cfg.group_shock_rho;
        for (int t = 0; t < T; ++t) {
            const double shared = cfg.sigma_e * gauss(engine);
            for (int i : draw.group_units) {
                E(t, i) = std::sqrt(1.0 - rho) * E(t, i) + std::sqrt(rho) * shared;
            }
        }
    }

    panel.Y = cfg.beta * X + cfg.gamma * Z + F * Lambda.transpose() + E;
    for (int i = 0; i < N; ++i) {
        for (int t = panel.t0[i]; t < T; ++t) panel.Y(t, i) += cfg.theta;
    }
    panel.X.push_back(std::move(X));
    panel.x_names.push_back("x1");
    panel.Z.push_back(std::move(Z));
    panel.z_names.push_back("z1");
    draw.theta_true = cfg.theta;
    return draw;
}

}  // namespace factimp
