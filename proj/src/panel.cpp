#include "panel.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace factimp {

std::vector<int> treatment_start_lengths(const Eigen::MatrixXi& D) {
    const int T = static_cast<int>(D.rows());
    const int N = static_cast<int>(D.cols());
    std::vector<int> t0(N, T);
    for (int i = 0; i < N; ++i) {
        int first_on = T;
        for (int t = 0; t < T; ++t) {
            const int v = D(t, i);
            if (v != 0 && v != 1) {
                throw ValidationError("treatment indicator must be 0/1 (unit " +
                                      std::to_string(i) + ", row " + std::to_string(t) + ")");
            }
            if (v == 1 && first_on == T) first_on = t;
            if (v == 0 && first_on < T) {
                throw ValidationError("treatment is not absorbing for unit " +
                                      std::to_string(i) + ": switches off at row " +
                                      std::to_string(t));
            }
        }
        t0[i] = first_on;
    }
    return t0;
}

void validate_dataset(const PanelDataset& data) {
    const int T = data.T();
    const int N = data.N();
    if (static_cast<int>(data.units.size()) != N) {
        throw ValidationError("unit list length does not match Y columns");
    }
    if (data.D.rows() != T || data.D.cols() != N) {
        throw ValidationError("D dimensions do not match Y");
    }
    for (const auto& x : data.X) {
        if (x.rows() != T || x.cols() != N) throw ValidationError("X slice dimensions do not match Y");
    }
    for (const auto& z : data.Z) {
        if (z.rows() != T || z.cols() != N) throw ValidationError("Z slice dimensions do not match Y");
    }
    const std::vector<int> t0 = treatment_start_lengths(data.D);
    if (data.t0 != t0) {
        throw ValidationError("stored pre-treatment lengths disagree with the leading zeros of D");
    }
}

bool BlockDecomposition::is_control(int unit) const {
    return std::binary_search(control_units.begin(), control_units.end(), unit);
}

GrowthSeries compute_growth_rate(const std::vector<double>& cumulative, int window) {
    const int T = static_cast<int>(cumulative.size());
    if (window <= 0) throw ValidationError("growth window must be positive");
    if (T < window + 1) {
        throw ValidationError("cumulative series too short: need at least " +
                              std::to_string(window + 1) + " days, got " + std::to_string(T));
    }
    GrowthSeries out;
    out.values.assign(T, kMissing);
    out.valid_from = window + 1;

    std::vector<double> inc(T, kMissing);
    for (int t = 1; t < T; ++t) {
        const double a = cumulative[t - 1];
        const double b = cumulative[t];
        if (is_missing(a) || is_missing(b)) continue;
        if (b < a) {
            throw ValidationError("cumulative count decreases at index " + std::to_string(t) +
                                  " (" + std::to_string(a) + " -> " + std::to_string(b) + ")");
        }
        inc[t] = b - a;
    }
    for (int t = out.valid_from; t < T; ++t) {
        const double d1 = inc[t];
        const double d0 = inc[t - window];
        if (is_missing(d1) || is_missing(d0) || d1 <= 0.0 || d0 <= 0.0) continue;
        out.values[t] = std::log(d1) - std::log(d0);
    }
    return out;
}

Matrix build_lagged_design(const Matrix& raw, int m) {
    const int T = static_cast<int>(raw.rows());
    if (m < 0) throw ValidationError("lag must be non-negative");
    if (m >= T) {
        throw ValidationError("lag " + std::to_string(m) + " leaves an empty design (T = " +
                              std::to_string(T) + ")");
    }
    Matrix out = Matrix::Constant(T, raw.cols(), kMissing);
    out.bottomRows(T - m) = raw.topRows(T - m);
    return out;
}

BlockDecomposition decompose_blocks(const PanelDataset& data, bool allow_all_control) {
    BlockDecomposition blocks;
    blocks.T = data.T();
    blocks.N = data.N();
    blocks.t0 = data.t0;
    for (int i = 0; i < blocks.N; ++i) {
        if (data.t0[i] >= blocks.T) {
            blocks.control_units.push_back(i);
        } else {
            blocks.treated_units.push_back(i);
        }
    }
    if (blocks.control_units.empty()) {
        throw ValidationError("no never-treated control units in the window");
    }
    if (blocks.treated_units.empty()) {
        if (!allow_all_control) {
            throw ValidationError("no treated units; pass allow_all_control for a pure placebo panel");
        }
        blocks.t0_common = blocks.T;
        return blocks;
    }
    int t0c = blocks.T;
    for (int i : blocks.treated_units) t0c = std::min(t0c, data.t0[i]);
    blocks.t0_common = t0c;
    return blocks;
}

ValidityReport validate_assumptions(const BlockDecomposition& blocks, int r, int covariate_count) {
    if (r < 0) throw ValidationError("factor count must be non-negative");
    (void)covariate_count;
    ValidityReport rep;
    const long long T = blocks.T;
    const long long N = blocks.N;
    const long long N0 = blocks.N0();
    const long long T0 = blocks.t0_common;

    rep.tall_lhs = T * N0;
    rep.tall_rhs = static_cast<long long>(r) * (T + N0);
    rep.wide_lhs = N * T0;
    rep.wide_rhs = static_cast<long long>(r) * (N + T0);
    if (rep.tall_lhs <= rep.tall_rhs) {
        throw ValidationError("order condition violated: T*N0 = " + std::to_string(rep.tall_lhs) +
                              " <= r*(T+N0) = " + std::to_string(rep.tall_rhs));
    }
    if (rep.wide_lhs <= rep.wide_rhs) {
        throw ValidationError("order condition violated: N*T0 = " + std::to_string(rep.wide_lhs) +
                              " <= r*(N+T0) = " + std::to_string(rep.wide_rhs));
    }
    const double denom = static_cast<double>(std::min(N0, T0));
    rep.ratio_sqrt_n = denom > 0 ? std::sqrt(static_cast<double>(N)) / denom : HUGE_VAL;
    rep.ratio_sqrt_t = denom > 0 ? std::sqrt(static_cast<double>(T)) / denom : HUGE_VAL;
    if (rep.ratio_sqrt_n > 1.0) {
        rep.warnings.push_back("sqrt(N)/min(N0,T0) = " + std::to_string(rep.ratio_sqrt_n) +
                               " exceeds 1; asymptotic approximations may be poor");
    }
    if (rep.ratio_sqrt_t > 1.0) {
        rep.warnings.push_back("sqrt(T)/min(N0,T0) = " + std::to_string(rep.ratio_sqrt_t) +
                               " exceeds 1; asymptotic approximations may be poor");
    }
    return rep;
}

}  // namespace factimp
