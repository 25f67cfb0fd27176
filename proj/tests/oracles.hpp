// Independent reference implementations used to check the production code.
// Everything here is deliberately written from first principles (cyclic
// Jacobi rotations, hand-rolled Gaussian elimination, literal recursions) so
// it shares no code path with the library being tested.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "seir.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Full symmetric eigendecomposition by cyclic Jacobi rotations.
// Returns eigenvalues in descending order with matching eigenvectors.
inline void jacobi_eigen(Matrix A, Vector& values, Matrix& vectors) {
    const int n = static_cast<int>(A.rows());
    vectors = Matrix::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = vectors(k, p), vkq = vectors(k, q);
                    vectors(k, p) = c * vkp - s * vkq;
                    vectors(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    // selection sort, descending
    values.resize(n);
    for (int k = 0; k < n; ++k) values[k] = A(k, k);
    for (int a = 0; a < n; ++a) {
        int best = a;
        for (int b = a + 1; b < n; ++b)
            if (values[b] > values[best]) best = b;
        std::swap(values[a], values[best]);
        vectors.col(a).swap(vectors.col(best));
    }
}

// Least squares through the normal equations, solved by Gaussian
// elimination with partial pivoting.
inline Vector normal_equations(const Matrix& A, const Vector& b) {
    const int k = static_cast<int>(A.cols());
    Matrix G = A.transpose() * A;
    Vector rhs = A.transpose() * b;
    for (int col = 0; col < k; ++col) {
        int piv = col;
        for (int r = col + 1; r < k; ++r)
            if (std::abs(G(r, col)) > std::abs(G(piv, col))) piv = r;
        if (std::abs(G(piv, col)) < 1e-14) throw std::runtime_error("oracle: singular system");
        G.row(col).swap(G.row(piv));
        std::swap(rhs[col], rhs[piv]);
        for (int r = col + 1; r < k; ++r) {
            const double f = G(r, col) / G(col, col);
            G.row(r) -= f * G.row(col);
            rhs[r] -= f * rhs[col];
        }
    }
    Vector x(k);
    for (int r = k - 1; r >= 0; --r) {
        double acc = rhs[r];
        for (int c = r + 1; c < k; ++c) acc -= G(r, c) * x[c];
        x[r] = acc / G(r, r);
    }
    return x;
}

// Literal transcription of the compartment update equations, written
// independently of seir_step.
inline factimp::SeirState seir_step_direct(const factimp::SeirState& s,
                                           const factimp::SeirParams& p, double beta) {
    factimp::SeirState n;
    const double force = beta * s.S * (s.I1 + s.I2) / p.population;
    n.S = s.S - force;
    n.E1 = s.E1 + (1 - p.f) * force - 2 * p.sigma * s.E1;
    n.E2 = s.E2 + 2 * p.sigma * s.E1 - 2 * p.sigma * s.E2;
    n.I1 = s.I1 + 2 * p.sigma * s.E2 - 2 * p.gamma * s.I1;
    n.I2 = s.I2 + 2 * p.gamma * s.I1 - 2 * p.gamma * s.I2;
    n.Q = s.Q + 2 * p.sigma * s.E2 * std::exp(-p.gamma * p.kappa) - p.kappa * s.Q;
    n.C = s.C + (1 - p.kappa) * p.eta * s.Q;
    n.D = s.D + p.kappa * p.eta * s.Q;
    n.E1j = s.E1j + p.f * force - 2 * p.sigma * s.E1j;
    n.E2j = s.E2j + 2 * p.sigma * s.E1j - 2 * p.sigma * s.E2j;
    n.I1j = s.I1j + 2 * p.sigma * s.E2j - 2 * p.gamma * s.I1j;
    n.I2j = s.I2j + 2 * p.gamma * s.I1j - 2 * p.gamma * s.I2j;
    n.Qj = s.Qj + 2 * p.sigma * s.E2j * std::exp(-p.gamma * p.kappa) - p.kappa * s.Qj;
    n.Cj = s.Cj + (1 - p.kappa) * p.eta * s.Qj;
    n.Dj = s.Dj + p.kappa * p.eta * s.Qj;
    return n;
}

// Two-way fixed-effects fit mu + a_i + x_t on the observed cells of Y,
// computed by alternating demeaning until convergence.
inline Matrix twoway_fit(const Matrix& Y, const Eigen::MatrixXi& observed) {
    const int T = static_cast<int>(Y.rows());
    const int N = static_cast<int>(Y.cols());
    Vector a = Vector::Zero(N), x = Vector::Zero(T);
    double mu = 0.0;
    double count = 0.0, sum = 0.0;
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t)
            if (observed(t, i)) {
                sum += Y(t, i);
                count += 1.0;
            }
    mu = sum / count;
    for (int iter = 0; iter < 500; ++iter) {
        double moved = 0.0;
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            int m = 0;
            for (int t = 0; t < T; ++t)
                if (observed(t, i)) {
                    acc += Y(t, i) - mu - x[t];
                    ++m;
                }
            const double next = m > 0 ? acc / m : 0.0;
            moved = std::max(moved, std::abs(next - a[i]));
            a[i] = next;
        }
        for (int t = 0; t < T; ++t) {
            double acc = 0.0;
            int m = 0;
            for (int i = 0; i < N; ++i)
                if (observed(t, i)) {
                    acc += Y(t, i) - mu - a[i];
                    ++m;
                }
            const double next = m > 0 ? acc / m : 0.0;
            moved = std::max(moved, std::abs(next - x[t]));
            x[t] = next;
        }
        if (moved < 1e-13) break;
    }
    Matrix fit(T, N);
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) fit(t, i) = mu + a[i] + x[t];
    return fit;
}

}  // namespace oracle
