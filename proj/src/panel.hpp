#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dates.hpp"

namespace factimp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool is_missing(double v) { return !std::isfinite(v); }
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// A day-indexed outcome panel. Rows are days, columns are units. Missing
/// cells (undefined growth rates, masked lag rows) are NaN. Immutable after
/// construction; every operation takes it by const reference.
struct PanelDataset {
    std::vector<std::string> units;  // length N
    Date start_date;                 // row t corresponds to start_date + t
    Matrix Y;                        // T x N outcome
    Eigen::MatrixXi D;               // T x N treatment indicator (0/1)
    std::vector<Matrix> X;           // p lagged covariates, each T x N
    std::vector<Matrix> Z;           // q contemporaneous covariates, each T x N
    std::vector<int> t0;             // per-unit pre-treatment length; == T when never treated
    std::vector<std::string> x_names;
    std::vector<std::string> z_names;

    int T() const { return static_cast<int>(Y.rows()); }
    int N() const { return static_cast<int>(Y.cols()); }
    Date date_at(int t) const { return start_date + t; }
};

/// Counts leading zeros of each treatment column and checks that treatment
/// is absorbing within the window. Throws ValidationError otherwise.
std::vector<int> treatment_start_lengths(const Eigen::MatrixXi& D);

/// Structural checks: dimension agreement, absorbing treatment, t0
/// consistency. Throws ValidationError with the offending unit/cell.
void validate_dataset(const PanelDataset& data);

/// Index bookkeeping for the observed blocks of the potential-outcome
/// matrix: controls span TALL (all rows), the common pre-period spans WIDE
/// (t < t0_common, all units), and the treated post cells form MISS.
struct BlockDecomposition {
    std::vector<int> control_units;  // ascending unit indices, N0 of them
    std::vector<int> treated_units;  // ascending, N1 of them
    std::vector<int> t0;             // copy of per-unit pre-period lengths
    int t0_common = 0;               // min over treated units (T when all-control)
    int T = 0;
    int N = 0;

    int N0() const { return static_cast<int>(control_units.size()); }
    int N1() const { return static_cast<int>(treated_units.size()); }
    bool is_control(int unit) const;
    bool in_miss(int t, int unit) const { return !is_control(unit) && t >= t0[unit]; }
    bool in_tall(int t, int unit) const { return is_control(unit); }
    bool in_wide(int t, int unit) const { return t < t0_common; }
    bool in_bal(int t, int unit) const { return is_control(unit) && t < t0_common; }
};

/// Weekly log-growth of a cumulative count series. values[t] is defined only
/// when both the daily increment at t and at t-window are positive.
struct GrowthSeries {
    std::vector<double> values;
    int valid_from = 0;  // first index where the lagged increment exists
};

/// values[t] = log(dC_t) - log(dC_{t-window}) with dC_t = C_t - C_{t-1}.
/// Cells with non-positive daily increments are NaN. Throws ValidationError
/// if the cumulative series decreases.
GrowthSeries compute_growth_rate(const std::vector<double>& cumulative, int window = 7);

/// Shifts rows down by m days: output row t equals input row t-m, the first
/// m rows are NaN. Throws ValidationError when m >= T (empty design) or m<0.
Matrix build_lagged_design(const Matrix& raw, int m);

/// Splits units into never-treated controls and treated units and computes
/// the common pre-period. Requires at least one control; requires at least
/// one treated unit unless allow_all_control is set.
BlockDecomposition decompose_blocks(const PanelDataset& data, bool allow_all_control = false);

/// Diagnostics from the identification order conditions.
struct ValidityReport {
    bool order_ok = true;
    long long tall_lhs = 0, tall_rhs = 0;  // T*N0 vs r*(T+N0)
    long long wide_lhs = 0, wide_rhs = 0;  // N*T0 vs r*(N+T0)
    double ratio_sqrt_n = 0.0;             // sqrt(N)/min(N0,T0)
    double ratio_sqrt_t = 0.0;             // sqrt(T)/min(N0,T0)
    std::vector<std::string> warnings;
};

/// Checks T*N0 > r(T+N0) and N*T0 > r(N+T0); reports the asymptotic ratios
/// as non-fatal warnings when they exceed 1. Throws ValidationError naming
/// the failing inequality when an order condition is violated.
ValidityReport validate_assumptions(const BlockDecomposition& blocks, int r, int covariate_count);

}  // namespace factimp
