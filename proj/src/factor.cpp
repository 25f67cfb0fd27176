#include "factor.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace factimp {

namespace {

// Descending eigenpairs of a symmetric PSD matrix (values clamped at 0).
void sym_eigs_desc(const Matrix& G, Vector& values, Matrix& vectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    if (es.info() != Eigen::Success) {
        throw ComputationError("eigendecomposition failed to converge");
    }
    const int n = static_cast<int>(G.rows());
    values.resize(n);
    vectors.resize(n, n);
    for (int k = 0; k < n; ++k) {
        values[k] = std::max(0.0, es.eigenvalues()[n - 1 - k]);
        vectors.col(k) = es.eigenvectors().col(n - 1 - k);
    }
}

// Makes the largest-magnitude entry of each factor column positive, flipping
// the matching loading column. First occurrence wins on exact ties.
void fix_signs(Matrix& F, Matrix& loadings) {
    for (int k = 0; k < F.cols(); ++k) {
        int arg = 0;
        double best = -1.0;
        for (int t = 0; t < F.rows(); ++t) {
            const double a = std::abs(F(t, k));
            if (a > best) {
                best = a;
                arg = t;
            }
        }
        if (F(arg, k) < 0.0) {
            F.col(k) = -F.col(k);
            if (k < loadings.cols()) loadings.col(k) = -loadings.col(k);
        }
    }
}

}  // namespace

PcaResult pca_factors(const Matrix& R, int r) {
    const int T = static_cast<int>(R.rows());
    const int N = static_cast<int>(R.cols());
    if (r < 0) throw ValidationError("factor count must be non-negative");
    if (r > std::min(T, N)) {
        throw ValidationError("factor count " + std::to_string(r) + " exceeds min(T,N) = " +
                              std::to_string(std::min(T, N)));
    }
    if (!R.allFinite()) {
        throw ValidationError("pca_factors requires a complete matrix (no missing cells)");
    }
    PcaResult out;
    if (r == 0) {
        out.F.resize(T, 0);
        out.loadings.resize(N, 0);
        out.eigenvalues.resize(0);
        return out;
    }

    Vector values;
    Matrix vectors;
    bool use_tall_gram = T <= N;
    if (!use_tall_gram) {
        sym_eigs_desc(Matrix(R.transpose() * R), values, vectors);
        const double tol = 1e-12 * std::max(values[0], 1.0);
        if (values[std::min(r, static_cast<int>(values.size())) - 1] <= tol) {
            // Cannot cross-multiply through a null singular value; the T x T
            // Gram still yields an orthonormal basis there.
            out.degenerate = true;
            use_tall_gram = true;
        }
    }
    if (use_tall_gram) {
        sym_eigs_desc(Matrix(R * R.transpose()), values, vectors);
        const double tol = 1e-12 * std::max(values[0], 1.0);
        if (values[r - 1] <= tol) out.degenerate = true;
        out.F = std::sqrt(static_cast<double>(T)) * vectors.leftCols(r);
    } else {
        out.F.resize(T, r);
        for (int k = 0; k < r; ++k) {
            const double s = std::sqrt(values[k]);
            out.F.col(k) = std::sqrt(static_cast<double>(T)) / s * (R * vectors.col(k));
        }
    }
    out.loadings = R.transpose() * out.F / static_cast<double>(T);
    out.eigenvalues = values.head(r) / (static_cast<double>(T) * static_cast<double>(N));
    fix_signs(out.F, out.loadings);
    return out;
}

namespace {

double ic_penalty(IcPenalty penalty, int T, int N, int k) {
    const double nt = static_cast<double>(N) * static_cast<double>(T);
    const double sum = static_cast<double>(N + T);
    switch (penalty) {
        case IcPenalty::p1:
            return k * (sum / nt) * std::log(nt / sum);
        case IcPenalty::p2:
        default:
            return k * (sum / nt) * std::log(static_cast<double>(std::min(N, T)));
    }
}

// IC path on one block; V(k) from the Gram spectrum.
std::pair<int, std::vector<double>> select_r_block(const Matrix& R, int r_max, IcPenalty penalty) {
    const int T = static_cast<int>(R.rows());
    const int N = static_cast<int>(R.cols());
    const int kmax = std::min(r_max, std::min(T, N));
    Vector values;
    Matrix vectors;
    if (T <= N) {
        sym_eigs_desc(Matrix(R * R.transpose()), values, vectors);
    } else {
        sym_eigs_desc(Matrix(R.transpose() * R), values, vectors);
    }
    const double nt = static_cast<double>(N) * static_cast<double>(T);
    double tail = values.sum();
    std::vector<double> ic(kmax + 1);
    int best = 0;
    for (int k = 0; k <= kmax; ++k) {
        if (k > 0) tail -= values[k - 1];
        const double vk = std::max(tail, 0.0) / nt;
        const double logv = vk > 0.0 ? std::log(vk) : -HUGE_VAL;
        ic[k] = logv + ic_penalty(penalty, T, N, k);
        if (ic[k] < ic[best]) best = k;
    }
    return {best, ic};
}

}  // namespace

RSelection select_r(const Matrix& tall, const Matrix& wide, int r_max, IcPenalty penalty) {
    if (r_max < 0) throw ValidationError("r_max must be non-negative");
    const int cap = std::min({static_cast<int>(tall.rows()), static_cast<int>(tall.cols()),
                              static_cast<int>(wide.rows()), static_cast<int>(wide.cols())});
    if (r_max > cap) {
        throw ValidationError("r_max " + std::to_string(r_max) +
                              " exceeds the smallest block dimension " + std::to_string(cap));
    }
    if (!tall.allFinite() || !wide.allFinite()) {
        throw ValidationError("select_r requires complete blocks");
    }
    RSelection sel;
    auto [rt, ict] = select_r_block(tall, r_max, penalty);
    auto [rw, icw] = select_r_block(wide, r_max, penalty);
    sel.r_tall = rt;
    sel.r_wide = rw;
    sel.ic_tall = std::move(ict);
    sel.ic_wide = std::move(icw);
    sel.r = std::max(rt, rw);
    return sel;
}

LoadingsResult loadings_two_step(const Matrix& R, const Matrix& F, const std::vector<int>& t0) {
    const int T = static_cast<int>(R.rows());
    const int N = static_cast<int>(R.cols());
    const int r = static_cast<int>(F.cols());
    if (F.rows() != T) throw ValidationError("factor matrix rows do not match residual rows");
    if (static_cast<int>(t0.size()) != N) {
        throw ValidationError("pre-period vector length does not match unit count");
    }

    LoadingsResult out;
    out.Lambda.resize(N, r + 1);
    for (int i = 0; i < N; ++i) {
        const int rows_cap = std::min(t0[i], T);
        std::vector<int> rows;
        rows.reserve(rows_cap);
        for (int t = 0; t < rows_cap; ++t) {
            if (is_missing(R(t, i))) continue;
            if (r > 0 && !F.row(t).allFinite()) continue;
            rows.push_back(t);
        }
        const int m = static_cast<int>(rows.size());
        if (m < r + 2) {
            throw ComputationError("unit " + std::to_string(i) + " has only " + std::to_string(m) +
                                   " usable pre-treatment rows; intercept-augmented regression "
                                   "with r = " + std::to_string(r) + " needs at least " +
                                   std::to_string(r + 2));
        }
        Matrix design(m, r + 1);
        Vector rhs(m);
        for (int k = 0; k < m; ++k) {
            design(k, 0) = 1.0;
            if (r > 0) design.row(k).tail(r) = F.row(rows[k]);
            rhs[k] = R(rows[k], i);
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < r + 1) {
            out.warnings.push_back("unit " + std::to_string(i) +
                                   ": singular loading design, solved by pseudo-inverse");
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
            out.Lambda.row(i) = cod.solve(rhs).transpose();
        } else {
            out.Lambda.row(i) = qr.solve(rhs).transpose();
        }
    }
    return out;
}

Matrix reconstruct_common(const Matrix& F, const Matrix& Lambda) {
    const int T = static_cast<int>(F.rows());
    const int r = static_cast<int>(F.cols());
    if (Lambda.cols() != r + 1) {
        throw ValidationError("loading matrix must have r+1 columns (intercept first)");
    }
    Matrix augmented(T, r + 1);
    augmented.col(0).setOnes();
    if (r > 0) augmented.rightCols(r) = F;
    // NaN factor rows (outside the estimable window) propagate to C.
    for (int t = 0; t < T; ++t) {
        if (r > 0 && !F.row(t).allFinite()) augmented.row(t).setConstant(kMissing);
    }
    return augmented * Lambda.transpose();
}

}  // namespace factimp
