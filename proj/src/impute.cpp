#include "impute.hpp"

#include "errors.hpp"

namespace factimp {

ImputedPanel impute_counterfactuals(const PanelDataset& data, const BlockDecomposition& blocks,
                                    const IfeFit& fit, int r) {
    const int T = data.T();
    const int N = data.N();
    if (blocks.T != T || blocks.N != N) {
        throw ValidationError("block decomposition does not match the dataset dimensions");
    }

    ImputedPanel out;
    out.fit = fit;
    out.residuals = residualize(data.Y, data.X, data.Z, fit.beta, fit.gamma);

    // TALL block: control columns restricted to rows where every control
    // residual is observed, so the PCA input is complete by construction.
    const int N0 = blocks.N0();
    for (int t = 0; t < T; ++t) {
        bool complete = true;
        for (int i : blocks.control_units) {
            if (is_missing(out.residuals(t, i))) {
                complete = false;
                break;
            }
        }
        if (complete) out.tall_rows.push_back(t);
    }
    const int Tu = static_cast<int>(out.tall_rows.size());
    if (Tu < r + 2) {
        throw ComputationError("only " + std::to_string(Tu) +
                               " complete control rows available for factor extraction");
    }

    Matrix tall(Tu, N0);
    for (int a = 0; a < Tu; ++a) {
        for (int b = 0; b < N0; ++b) tall(a, b) = out.residuals(out.tall_rows[a], blocks.control_units[b]);
    }
    PcaResult pca = pca_factors(tall, r);
    if (pca.degenerate) {
        out.warnings.push_back("degenerate eigenvalues in factor extraction; ties broken by column order");
    }

    // Scatter factors back onto the full calendar; rows outside the TALL set
    // carry no factor estimate and stay missing downstream.
    Matrix F = Matrix::Constant(T, r, kMissing);
    for (int a = 0; a < Tu; ++a) F.row(out.tall_rows[a]) = pca.F.row(a);

    LoadingsResult loadings = loadings_two_step(out.residuals, F, blocks.t0);
    for (auto& w : loadings.warnings) out.warnings.push_back(std::move(w));

    out.factor_model.F = F;
    out.factor_model.Lambda = loadings.Lambda;
    out.factor_model.r = r;

    out.C_tilde = reconstruct_common(F, loadings.Lambda);
    out.Y0_hat = out.C_tilde;
    for (size_t k = 0; k < data.X.size(); ++k) out.Y0_hat += fit.beta[k] * data.X[k];
    for (size_t k = 0; k < data.Z.size(); ++k) out.Y0_hat += fit.gamma[k] * data.Z[k];
    return out;
}

}  // namespace factimp
