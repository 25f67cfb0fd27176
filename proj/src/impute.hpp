#pragma once

#include <string>
#include <vector>

#include "factor.hpp"
#include "ife.hpp"
#include "panel.hpp"

namespace factimp {

/// Fitted untreated outcomes for the whole panel. On treated post-treatment
/// cells Y0_hat is the imputed counterfactual X'beta + Z'gamma + C_tilde; on
/// observed cells it is the in-sample fit.
struct ImputedPanel {
    Matrix Y0_hat;            // T x N
    Matrix C_tilde;           // T x N common component [1 F] Lambda'
    Matrix residuals;         // R = Y - X beta - Z gamma, mask inherited
    FactorModel factor_model;
    IfeFit fit;
    std::vector<int> tall_rows;  // rows where every control residual is observed
    std::vector<std::string> warnings;
};

/// Appendix-style one-pass imputation: residualize with the control-group
/// slopes, extract factors from the TALL residual block, run the two-step
/// intercept-augmented loading regressions on each unit's pre-treatment
/// rows, and rebuild Y(0) everywhere. Treated rows at or past a unit's
/// adoption never enter factor or loading estimation.
ImputedPanel impute_counterfactuals(const PanelDataset& data, const BlockDecomposition& blocks,
                                    const IfeFit& fit, int r);

}  // namespace factimp
