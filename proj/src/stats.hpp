#pragma once

namespace factimp {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF (Acklam's rational approximation polished
/// with one Halley step against erfc; accurate to ~1e-15 over (0,1)).
double normal_quantile(double p);

/// Two-sided critical value for a confidence level, e.g. 0.95 -> 1.95996...
double normal_critical_value(double level);

}  // namespace factimp
