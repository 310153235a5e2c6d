#pragma once

#include <cmath>

namespace steinclt {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal density.
inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF via erfc; accurate in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

/// Inverse standard normal CDF. Rational initial guess refined with one
/// Halley step against erfc, good to ~1e-15 on (0,1).
double normal_quantile(double p);

}  // namespace steinclt
