#pragma once

#include <string>
#include <vector>

#include "panel.hpp"

namespace factimp {

/// Latent factor structure estimated from a residual block. Lambda carries
/// the unit intercept in its first column, so the common component is
/// [1 F] * Lambda'. Only that product is identified; F and Lambda are pinned
/// by the normalization F'F/T = I_r plus a sign convention.
struct FactorModel {
    Matrix F;       // T x r
    Matrix Lambda;  // N x (r+1), column 0 = intercept
    int r = 0;
};

struct PcaResult {
    Matrix F;                 // T x r, F'F/T = I_r
    Matrix loadings;          // N x r, loadings = R'F/T
    Vector eigenvalues;       // top-r eigenvalues of RR'/(T*N), descending
    bool degenerate = false;  // some requested component has (near-)zero eigenvalue
};

/// Asymptotic principal components on a complete T x N matrix. Works on the
/// smaller Gram matrix (RR' when T <= N, else R'R) and recovers the other
/// side by cross-multiplication. Rank-degenerate inputs fall back to the
/// T x T Gram so F stays orthonormal, with the degenerate flag set.
PcaResult pca_factors(const Matrix& R, int r);

enum class IcPenalty { p1, p2 };

struct RSelection {
    int r = 0;
    int r_tall = 0;
    int r_wide = 0;
    std::vector<double> ic_tall;  // IC(k), k = 0..r_max
    std::vector<double> ic_wide;
};

/// Estimates the factor count on each block with the information criterion
/// IC(k) = log V(k) + k * penalty(N,T) and returns max(r_tall, r_wide).
RSelection select_r(const Matrix& tall, const Matrix& wide, int r_max,
                    IcPenalty penalty = IcPenalty::p2);

inline int default_r_max(int t0_common, int n_controls) {
    return std::max(0, std::min(8, std::min(t0_common, n_controls) / 3));
}

struct LoadingsResult {
    Matrix Lambda;  // N x (r+1)
    std::vector<std::string> warnings;
};

/// Two-step intercept-augmented loading regressions: for every unit i,
/// regress its residual rows 1..T0_i on [1 F] (rows with missing residual or
/// missing F are dropped). Control units use all rows. Throws
/// ComputationError naming the unit when fewer than r+2 usable rows remain;
/// singular designs are solved by pseudo-inverse with a warning.
LoadingsResult loadings_two_step(const Matrix& R, const Matrix& F, const std::vector<int>& t0);

/// C = [1 F] * Lambda'.
Matrix reconstruct_common(const Matrix& F, const Matrix& Lambda);

}  // namespace factimp
