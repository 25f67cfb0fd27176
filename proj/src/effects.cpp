#include "effects.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "stats.hpp"

namespace factimp {

namespace {

std::vector<double> series_over_events(const Matrix& theta_it, const std::vector<int>& units,
                                       const std::vector<int>& t0, int T,
                                       std::vector<int>& counts) {
    int max_s = -1;
    for (int i : units) max_s = std::max(max_s, T - 1 - t0[i]);
    std::vector<double> sums(std::max(max_s + 1, 0), 0.0);
    counts.assign(std::max(max_s + 1, 0), 0);
    for (int i : units) {
        for (int t = t0[i]; t < T; ++t) {
            const double v = theta_it(t, i);
            if (is_missing(v)) continue;
            const int s = t - t0[i];
            sums[s] += v;
            counts[s] += 1;
        }
    }
    std::vector<double> series(sums.size(), kMissing);
    for (size_t s = 0; s < sums.size(); ++s) {
        if (counts[s] > 0) series[s] = sums[s] / counts[s];
    }
    return series;
}

}  // namespace

EffectsBundle compute_effects(const PanelDataset& data, const ImputedPanel& imputed,
                              const BlockDecomposition& blocks,
                              const std::vector<GroupDef>& groups) {
    const int T = data.T();
    const int N = data.N();
    EffectsBundle out;
    out.theta_it = Matrix::Constant(T, N, kMissing);
    for (int i : blocks.treated_units) {
        for (int t = blocks.t0[i]; t < T; ++t) {
            const double y = data.Y(t, i);
            const double y0 = imputed.Y0_hat(t, i);
            if (is_missing(y) || is_missing(y0)) continue;
            out.theta_it(t, i) = y - y0;
        }
    }
    out.theta_t = series_over_events(out.theta_it, blocks.treated_units, blocks.t0, T,
                                     out.theta_t_count);
    out.max_event_time = static_cast<int>(out.theta_t.size()) - 1;
    out.delta = std::min(std::sqrt(static_cast<double>(blocks.N0())),
                         std::sqrt(static_cast<double>(blocks.N1())));

    for (const auto& g : groups) {
        if (g.units.empty()) {
            throw ValidationError("group '" + g.name + "' is empty");
        }
        // Iterate in treated order so a full group reproduces theta_t bit for bit.
        std::vector<int> members;
        for (int i : blocks.treated_units) {
            if (std::find(g.units.begin(), g.units.end(), i) != g.units.end()) members.push_back(i);
        }
        if (members.size() != g.units.size()) {
            throw ValidationError("group '" + g.name + "' references units outside the treated set");
        }
        std::vector<int> counts;
        out.theta_jt[g.name] = series_over_events(out.theta_it, members, blocks.t0, T, counts);
        out.theta_jt_count[g.name] = std::move(counts);
    }
    return out;
}

long long sigma_e2_dof(long long n_obs, long long T, long long N0, int r, int K) {
    return n_obs - static_cast<long long>(r) * (T + N0) + static_cast<long long>(r) * r - K;
}

namespace {

struct ResidualContext {
    Matrix ehat;                  // T x N; NaN where not an untreated observed cell
    std::vector<Matrix> Gamma_t;  // per calendar t
    Matrix S_lambda_inv;          // (Lambda'Lambda/N)^-1
    Matrix S_f_inv;               // (Ftilde'Ftilde/T)^-1 over TALL rows
    double sigma_e2 = 0.0;
    long long dof = 0;
    int dim = 0;                  // r + 1
};

// Residuals e_it = R_it - C_it on cells where Y(0) is observed, plus the
// plug-in covariance pieces shared by both inference routines.
ResidualContext build_context(const ImputedPanel& imputed, const BlockDecomposition& blocks) {
    const int T = blocks.T;
    const int N = blocks.N;
    const int N0 = blocks.N0();
    const int r = imputed.factor_model.r;
    const int dim = r + 1;
    const Matrix& Lambda = imputed.factor_model.Lambda;

    ResidualContext ctx;
    ctx.dim = dim;
    ctx.ehat = Matrix::Constant(T, N, kMissing);
    for (int i = 0; i < N; ++i) {
        const int cap = std::min(blocks.t0[i], T);
        for (int t = 0; t < cap; ++t) {
            const double r_it = imputed.residuals(t, i);
            const double c_it = imputed.C_tilde(t, i);
            if (is_missing(r_it) || is_missing(c_it)) continue;
            ctx.ehat(t, i) = r_it - c_it;
        }
    }

    double ss = 0.0;
    long long n_obs = 0;
    for (int i : blocks.control_units) {
        for (int t = 0; t < T; ++t) {
            const double e = ctx.ehat(t, i);
            if (is_missing(e)) continue;
            ss += e * e;
            ++n_obs;
        }
    }
    const int K = static_cast<int>(imputed.fit.beta.size() + imputed.fit.gamma.size());
    ctx.dof = sigma_e2_dof(n_obs, static_cast<long long>(imputed.tall_rows.size()), N0, r, K);
    if (ctx.dof <= 0) {
        throw ComputationError("non-positive degrees of freedom for sigma_e2: " +
                               std::to_string(ctx.dof));
    }
    ctx.sigma_e2 = ss / static_cast<double>(ctx.dof);

    ctx.Gamma_t.assign(T, Matrix::Zero(dim, dim));
    for (int t = 0; t < T; ++t) {
        Matrix g = Matrix::Zero(dim, dim);
        for (int i : blocks.control_units) {
            const double e = ctx.ehat(t, i);
            if (is_missing(e)) continue;
            g.noalias() += Lambda.row(i).transpose() * Lambda.row(i) * (e * e);
        }
        ctx.Gamma_t[t] = g / static_cast<double>(N0);
    }

    Matrix s_lambda = Lambda.transpose() * Lambda / static_cast<double>(N);
    ctx.S_lambda_inv = s_lambda.ldlt().solve(Matrix::Identity(dim, dim));

    Matrix s_f = Matrix::Zero(dim, dim);
    for (int t : imputed.tall_rows) {
        Vector f(dim);
        f[0] = 1.0;
        if (r > 0) f.tail(r) = imputed.factor_model.F.row(t).transpose();
        s_f.noalias() += f * f.transpose();
    }
    s_f /= static_cast<double>(std::max<size_t>(imputed.tall_rows.size(), 1));
    ctx.S_f_inv = s_f.ldlt().solve(Matrix::Identity(dim, dim));
    return ctx;
}

Vector augmented_factor(const ImputedPanel& imputed, int t) {
    const int r = imputed.factor_model.r;
    Vector f(r + 1);
    f[0] = 1.0;
    if (r > 0) f.tail(r) = imputed.factor_model.F.row(t).transpose();
    return f;
}

// Loading-channel variance at one event time:
// (1/N0) * mean_loading' S^-1 Gamma_t S^-1 mean_loading, with Gamma_t
// averaged over the calendar days the contributing units hit. The control
// noise behind this term is shared by every unit imputed on the same day,
// so it does not shrink with the number of treated units.
double loading_term(const ResidualContext& ctx, const EffectsBundle& bundle,
                    const ImputedPanel& imputed, const BlockDecomposition& blocks,
                    const std::vector<int>& members, int s, int* n_out) {
    const int T = blocks.T;
    const Matrix& Lambda = imputed.factor_model.Lambda;
    Vector lam_mean = Vector::Zero(ctx.dim);
    Matrix gamma_mean = Matrix::Zero(ctx.dim, ctx.dim);
    int n = 0;
    for (int i : members) {
        const int t = blocks.t0[i] + s;
        if (t >= T || is_missing(bundle.theta_it(t, i))) continue;
        lam_mean += Lambda.row(i).transpose();
        gamma_mean += ctx.Gamma_t[t];
        ++n;
    }
    if (n_out) *n_out = n;
    if (n == 0) return kMissing;
    lam_mean /= n;
    gamma_mean /= n;
    const Vector v = ctx.S_lambda_inv * lam_mean;
    return v.dot(gamma_mean * v) / static_cast<double>(blocks.N0());
}

// Cross-sectional mean of squared residuals at the days the members hit at
// event time s, excluding `excluded` units; divisor N-1.
double sigma_e2_at(const ResidualContext& ctx, const EffectsBundle& bundle,
                   const BlockDecomposition& blocks, const std::vector<int>& members,
                   const std::vector<int>& excluded, int s) {
    double acc = 0.0;
    int days = 0;
    for (int i : members) {
        const int t = blocks.t0[i] + s;
        if (t >= blocks.T || is_missing(bundle.theta_it(t, i))) continue;
        double ss = 0.0;
        for (int k = 0; k < blocks.N; ++k) {
            if (std::find(excluded.begin(), excluded.end(), k) != excluded.end()) continue;
            const double e = ctx.ehat(t, k);
            if (!is_missing(e)) ss += e * e;
        }
        acc += ss / static_cast<double>(std::max(blocks.N - 1, 1));
        ++days;
    }
    return days > 0 ? acc / days : kMissing;
}

}  // namespace

InferenceResult att_inference(const EffectsBundle& bundle, const ImputedPanel& imputed,
                              const BlockDecomposition& blocks, double level) {
    ResidualContext ctx = build_context(imputed, blocks);
    const double z = normal_critical_value(level);
    const int S = static_cast<int>(bundle.theta_t.size());

    InferenceResult out;
    out.level = level;
    out.delta = bundle.delta;
    out.sigma_e2 = ctx.sigma_e2;
    out.dof = ctx.dof;
    out.Gamma_t = ctx.Gamma_t;
    out.variance.assign(S, kMissing);
    out.se.assign(S, kMissing);
    out.ci_lower.assign(S, kMissing);
    out.ci_upper.assign(S, kMissing);
    out.sigma_e2_t.assign(S, kMissing);

    const double d2 = bundle.delta * bundle.delta;
    double bar_sum = 0.0, bar_var = 0.0;
    int bar_n = 0;
    for (int s = 0; s < S; ++s) {
        int n = 0;
        const double lterm = loading_term(ctx, bundle, imputed, blocks, blocks.treated_units, s, &n);
        if (n == 0 || is_missing(bundle.theta_t[s])) continue;
        const double v = lterm + ctx.sigma_e2 / n;
        out.variance[s] = d2 * v;
        out.se[s] = std::sqrt(v);
        out.ci_lower[s] = bundle.theta_t[s] - z * out.se[s];
        out.ci_upper[s] = bundle.theta_t[s] + z * out.se[s];
        out.sigma_e2_t[s] = sigma_e2_at(ctx, bundle, blocks, blocks.treated_units, {}, s);
        bar_sum += bundle.theta_t[s];
        bar_var += v;
        ++bar_n;
    }
    if (bar_n > 0) {
        out.theta_bar = bar_sum / bar_n;
        out.theta_bar_se = std::sqrt(bar_var) / bar_n;
    }
    return out;
}

InferenceResult group_inference(const EffectsBundle& bundle, const ImputedPanel& imputed,
                                const BlockDecomposition& blocks, const GroupDef& group,
                                double level) {
    if (group.units.empty()) throw ValidationError("group '" + group.name + "' is empty");
    ResidualContext ctx = build_context(imputed, blocks);
    const double z = normal_critical_value(level);
    const int T = blocks.T;
    const int r = imputed.factor_model.r;
    const int dim = r + 1;

    auto it_series = bundle.theta_jt.find(group.name);
    if (it_series == bundle.theta_jt.end()) {
        throw ValidationError("group '" + group.name + "' was not present in compute_effects");
    }
    const std::vector<double>& series = it_series->second;
    const int S = static_cast<int>(series.size());

    // Phi_j: pre-period factor-weighted residual covariance averaged over the
    // group's units.
    Matrix phi = Matrix::Zero(dim, dim);
    int phi_units = 0;
    for (int i : group.units) {
        Matrix acc = Matrix::Zero(dim, dim);
        int m = 0;
        for (int t = 0; t < std::min(blocks.t0[i], T); ++t) {
            const double e = ctx.ehat(t, i);
            if (is_missing(e)) continue;
            const Vector f = augmented_factor(imputed, t);
            if (!f.allFinite()) continue;
            acc.noalias() += f * f.transpose() * (e * e);
            ++m;
        }
        if (m > 0) {
            phi += acc / static_cast<double>(m);
            ++phi_units;
        }
    }
    if (phi_units == 0) {
        throw ComputationError("group '" + group.name + "' has no usable pre-period residuals for Phi_j");
    }
    phi /= static_cast<double>(phi_units);

    InferenceResult out;
    out.level = level;
    out.delta = std::min(std::sqrt(static_cast<double>(blocks.N0())),
                         std::sqrt(static_cast<double>(group.units.size())));
    out.sigma_e2 = ctx.sigma_e2;
    out.dof = ctx.dof;
    out.Gamma_t = ctx.Gamma_t;
    out.Phi_j = phi;
    out.variance.assign(S, kMissing);
    out.se.assign(S, kMissing);
    out.ci_lower.assign(S, kMissing);
    out.ci_upper.assign(S, kMissing);
    out.sigma_e2_t.assign(S, kMissing);

    const double d2 = out.delta * out.delta;
    const double t0c = static_cast<double>(std::max(blocks.t0_common, 1));
    double bar_sum = 0.0, bar_var = 0.0;
    int bar_n = 0;
    for (int s = 0; s < S; ++s) {
        if (is_missing(series[s])) continue;
        int n = 0;
        const double lterm = loading_term(ctx, bundle, imputed, blocks, group.units, s, &n);
        if (n == 0) continue;

        double fterm = 0.0;
        int days = 0;
        for (int i : group.units) {
            const int t = blocks.t0[i] + s;
            if (t >= T || is_missing(bundle.theta_it(t, i))) continue;
            const Vector f = augmented_factor(imputed, t);
            if (!f.allFinite()) continue;
            const Vector v = ctx.S_f_inv * f;
            fterm += v.dot(phi * v) / t0c;
            ++days;
        }
        if (days == 0) continue;
        fterm /= days;
        const double sig_t = sigma_e2_at(ctx, bundle, blocks, group.units, group.units, s);
        if (is_missing(sig_t)) continue;
        out.sigma_e2_t[s] = sig_t;

        const double v = fterm + lterm + sig_t;
        out.variance[s] = d2 * v;
        out.se[s] = std::sqrt(v);
        out.ci_lower[s] = series[s] - z * out.se[s];
        out.ci_upper[s] = series[s] + z * out.se[s];
        bar_sum += series[s];
        bar_var += v;
        ++bar_n;
    }
    if (bar_n > 0) {
        out.theta_bar = bar_sum / bar_n;
        out.theta_bar_se = std::sqrt(bar_var) / bar_n;
    }
    return out;
}

}  // namespace factimp
