#include "ife.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "factor.hpp"

namespace factimp {

namespace {

struct StackedDesign {
    std::vector<std::pair<int, int>> cells;  // (t, i) of observed cells, column-major
    Matrix W;                                // n_obs x K, standardized covariates
    Vector y;                                // n_obs
    std::vector<double> mean, scale;         // per column, for mapping back
};

StackedDesign stack_observed(const Matrix& Y, const std::vector<const Matrix*>& slices) {
    const int T = static_cast<int>(Y.rows());
    const int N = static_cast<int>(Y.cols());
    const int K = static_cast<int>(slices.size());
    StackedDesign d;
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            if (is_missing(Y(t, i))) continue;
            bool ok = true;
            for (const Matrix* s : slices) {
                if (is_missing((*s)(t, i))) {
                    ok = false;
                    break;
                }
            }
            if (ok) d.cells.emplace_back(t, i);
        }
    }
    const int n = static_cast<int>(d.cells.size());
    if (n == 0) throw ValidationError("control block has no observed cells");
    d.W.resize(n, K);
    d.y.resize(n);
    for (int c = 0; c < n; ++c) {
        auto [t, i] = d.cells[c];
        d.y[c] = Y(t, i);
        for (int k = 0; k < K; ++k) d.W(c, k) = (*slices[k])(t, i);
    }
    d.mean.assign(K, 0.0);
    d.scale.assign(K, 1.0);
    for (int k = 0; k < K; ++k) {
        const double mu = d.W.col(k).mean();
        const double sd = std::sqrt((d.W.col(k).array() - mu).square().sum() / n);
        if (sd <= 0.0) {
            throw ComputationError("covariate column " + std::to_string(k) +
                                   " has no variation on the control block");
        }
        d.mean[k] = mu;
        d.scale[k] = sd;
        d.W.col(k) = (d.W.col(k).array() - mu) / sd;
    }
    return d;
}

}  // namespace

IfeFit fit_ife(const Matrix& Y0, const std::vector<Matrix>& X0, const std::vector<Matrix>& Z0,
               int r, IfeOptions options) {
    const int T = static_cast<int>(Y0.rows());
    const int N = static_cast<int>(Y0.cols());
    const int p = static_cast<int>(X0.size());
    const int q = static_cast<int>(Z0.size());
    const int K = p + q;
    if (r < 0 || r > std::min(T, N)) throw ValidationError("invalid factor count for fit_ife");

    std::vector<const Matrix*> slices;
    for (const auto& x : X0) slices.push_back(&x);
    for (const auto& z : Z0) slices.push_back(&z);
    for (const Matrix* s : slices) {
        if (s->rows() != T || s->cols() != N) {
            throw ValidationError("covariate slice dimensions do not match the control block");
        }
    }

    IfeFit fit;
    fit.r = r;
    fit.beta.resize(p);
    fit.gamma.resize(q);

    StackedDesign d;
    Eigen::HouseholderQR<Matrix> qr;
    Vector theta = Vector::Zero(K);
    if (K > 0) {
        d = stack_observed(Y0, slices);
        Eigen::ColPivHouseholderQR<Matrix> rank_check(d.W);
        rank_check.setThreshold(1e-8);
        if (rank_check.rank() < K) {
            std::string cols;
            const auto& perm = rank_check.colsPermutation().indices();
            for (int j = rank_check.rank(); j < K; ++j) {
                if (!cols.empty()) cols += ", ";
                cols += std::to_string(perm[j]);
            }
            throw ComputationError("stacked covariate design is rank deficient; dependent column(s): " +
                                   cols);
        }
        qr.compute(d.W);
        theta = qr.solve(d.y);
    }

    auto unmap = [&](const Vector& th) {
        for (int k = 0; k < p; ++k) fit.beta[k] = K > 0 ? th[k] / d.scale[k] : 0.0;
        for (int k = 0; k < q; ++k) fit.gamma[k] = th[p + k] / d.scale[p + k];
    };

    if (r == 0 || K == 0) {
        // Factorless model reduces to pooled least squares (or, with K == 0,
        // a pure factor model solved in one PCA pass).
        Matrix C = Matrix::Zero(T, N);
        if (r > 0) {
            Matrix U = Y0;
            for (int t = 0; t < T; ++t)
                for (int i = 0; i < N; ++i)
                    if (is_missing(U(t, i))) U(t, i) = 0.0;
            PcaResult pca = pca_factors(U, r);
            fit.F0 = pca.F;
            fit.Lambda0 = pca.loadings;
            C = pca.F * pca.loadings.transpose();
        } else {
            fit.F0.resize(T, 0);
            fit.Lambda0.resize(N, 0);
        }
        double obj = 0.0;
        if (K > 0) {
            Vector resid = d.y - d.W * theta;
            for (size_t c = 0; c < d.cells.size(); ++c) {
                auto [t, i] = d.cells[c];
                const double e = resid[c] - C(t, i);
                obj += e * e;
            }
        } else {
            for (int i = 0; i < N; ++i) {
                for (int t = 0; t < T; ++t) {
                    if (is_missing(Y0(t, i))) continue;
                    const double e = Y0(t, i) - C(t, i);
                    obj += e * e;
                }
            }
        }
        unmap(theta);
        fit.objective_path.push_back(obj);
        fit.converged = true;
        fit.iterations = 0;
        return fit;
    }

    Matrix C = Matrix::Zero(T, N);
    Matrix U(T, N);
    PcaResult pca;
    double prev_obj = HUGE_VAL;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        // Residual given current slopes; masked cells take the current
        // common component so the PCA update never moves them.
        U = C;
        Vector fitted = d.W * theta;
        for (size_t c = 0; c < d.cells.size(); ++c) {
            auto [t, i] = d.cells[c];
            U(t, i) = d.y[c] - fitted[c];
        }
        pca = pca_factors(U, r);
        C.noalias() = pca.F * pca.loadings.transpose();

        Vector rhs(d.y.size());
        for (size_t c = 0; c < d.cells.size(); ++c) {
            auto [t, i] = d.cells[c];
            rhs[c] = d.y[c] - C(t, i);
        }
        theta = qr.solve(rhs);
        const double obj = (rhs - d.W * theta).squaredNorm();
        fit.objective_path.push_back(obj);
        fit.iterations = iter;
        if (std::abs(prev_obj - obj) < options.tol * std::max(1.0, prev_obj)) {
            fit.converged = true;
            break;
        }
        prev_obj = obj;
    }
    fit.F0 = pca.F;
    fit.Lambda0 = pca.loadings;
    unmap(theta);
    return fit;
}

Matrix residualize(const Matrix& Y, const std::vector<Matrix>& X, const std::vector<Matrix>& Z,
                   const Vector& beta, const Vector& gamma) {
    if (static_cast<int>(X.size()) != beta.size() || static_cast<int>(Z.size()) != gamma.size()) {
        throw ValidationError("coefficient dimensions do not match covariate tensors");
    }
    Matrix R = Y;
    for (size_t k = 0; k < X.size(); ++k) R -= beta[k] * X[k];
    for (size_t k = 0; k < Z.size(); ++k) R -= gamma[k] * Z[k];
    return R;
}

}  // namespace factimp
