#pragma once

#include <map>
#include <string>
#include <vector>

#include "impute.hpp"
#include "panel.hpp"

namespace factimp {

struct GroupDef {
    std::string name;
    std::vector<int> units;  // panel unit indices; must be treated units
};

/// Treatment-effect estimates aligned on event time (days since a unit's
/// announcement). theta_t[s] is the mean of theta_it over treated units with
/// an observed outcome s days after their own announcement.
struct EffectsBundle {
    Matrix theta_it;                 // T x N, NaN outside treated post cells
    std::vector<double> theta_t;     // by event time
    std::vector<int> theta_t_count;  // contributing units per event time
    std::map<std::string, std::vector<double>> theta_jt;
    std::map<std::string, std::vector<int>> theta_jt_count;
    double delta = 0.0;              // min(sqrt(N0), sqrt(N1))
    int max_event_time = -1;
};

EffectsBundle compute_effects(const PanelDataset& data, const ImputedPanel& imputed,
                              const BlockDecomposition& blocks,
                              const std::vector<GroupDef>& groups = {});

/// Closed-form inference output for one effect series. Variances carry the
/// delta^2 scaling of the asymptotic statements; confidence bounds are
/// point +- z * sqrt(variance)/delta.
struct InferenceResult {
    std::vector<double> variance;    // per event time
    std::vector<double> se;          // sqrt(variance)/delta
    std::vector<double> ci_lower;
    std::vector<double> ci_upper;
    double sigma_e2 = 0.0;           // pooled control residual variance
    std::vector<double> sigma_e2_t;  // cross-sectional residual variance per event time
    double delta = 0.0;
    long long dof = 0;               // divisor of sigma_e2
    double level = 0.95;
    std::vector<Matrix> Gamma_t;     // per calendar day, (r+1)x(r+1)
    Matrix Phi_j;                    // group inference only
    /// Time-averaged estimand over the post-treatment window.
    double theta_bar = 0.0;
    double theta_bar_se = 0.0;
};

/// Degrees of freedom of the pooled residual variance:
/// n_obs - r*(T+N0) + r^2 - K.
long long sigma_e2_dof(long long n_obs, long long T, long long N0, int r, int K);

/// ATT inference: pooled sigma_e2 with the exact degrees-of-freedom
/// correction, heteroskedasticity-robust loading covariance Gamma_t, and the
/// closed-form per-event-time variance. Throws ComputationError when the
/// degrees of freedom are non-positive.
InferenceResult att_inference(const EffectsBundle& bundle, const ImputedPanel& imputed,
                              const BlockDecomposition& blocks, double level = 0.95);

/// Group inference adds the factor term (driven by the group's pre-period
/// residuals through Phi_j) and replaces the pooled error term with the
/// cross-sectional sigma_e2_t that excludes the group's own units.
InferenceResult group_inference(const EffectsBundle& bundle, const ImputedPanel& imputed,
                                const BlockDecomposition& blocks, const GroupDef& group,
                                double level = 0.95);

}  // namespace factimp
