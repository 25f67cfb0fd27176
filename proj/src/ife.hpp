#pragma once

#include <vector>

#include "panel.hpp"

namespace factimp {

struct IfeOptions {
    double tol = 1e-8;   // relative change of the sum of squared residuals
    int max_iter = 1000;
};

/// Control-group slope fit under the interactive-fixed-effects model,
/// obtained by alternating least squares on the stacked covariates and
/// principal components on the residual. objective_path is non-increasing
/// by construction.
struct IfeFit {
    Vector beta;                        // p, on the raw covariate scale
    Vector gamma;                       // q
    Matrix F0;                          // T x r control-block factors
    Matrix Lambda0;                     // N0 x r control-block loadings
    std::vector<double> objective_path; // SSR per iteration (standardized scale)
    bool converged = false;
    int iterations = 0;
    int r = 0;
};

/// Fits Y0 = sum_k X0_k beta_k + sum_k Z0_k gamma_k + F Lambda' + e on the
/// control block. Cells where the outcome or any covariate is NaN are
/// excluded from both the least-squares and the PCA step (the latter via an
/// EM-style fill with the current common component). Covariates are
/// standardized internally for conditioning; coefficients are mapped back.
/// Throws ComputationError naming the columns when the stacked design is
/// rank deficient. Non-convergence returns the best iterate with
/// converged = false.
IfeFit fit_ife(const Matrix& Y0, const std::vector<Matrix>& X0, const std::vector<Matrix>& Z0,
               int r, IfeOptions options = {});

/// R_it = Y_it - X_it' beta - Z_it' gamma; NaN anywhere propagates.
Matrix residualize(const Matrix& Y, const std::vector<Matrix>& X, const std::vector<Matrix>& Z,
                   const Vector& beta, const Vector& gamma);

}  // namespace factimp
