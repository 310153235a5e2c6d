#pragma once

#include "steinclt/errors.hpp"

namespace steinclt::bounds {

/// Inputs shared by the bound evaluators. All unspecified absolute constants
/// default to 1 and enter through c_user; logs are natural.
struct BoundInputs {
  double n = 3;
  double d = 3;
  double B = 1.0;          // sub-exponential scale
  double alpha_sq = 1.0;   // pair non-degeneracy floor
  double beta_sq = 1.0;    // triple non-degeneracy floor
  double cov_gap = 0.0;    // infinity-norm covariance discrepancy
  double gamma = 0.1;      // failure probability
  double c_user = 1.0;

  void validate() const;
};

/// Main Kolmogorov-distance bound:
/// c [ cov_gap (log d)(log n)/alpha^2
///     + B^3 (log d)^2 sqrt(log(dn)) (log n)^4 / (alpha^2 beta^2 sqrt(n)) ].
double fklz_bound(const BoundInputs& in);

struct BoundedCaseRecord {
  double delta0, delta1, delta2;
  double t0, t, kappa;
  double bound;
  bool t0_clamped;  // t0 hit the 1/2 cap
};
/// Smoothing-parameter bookkeeping and bound for data with
/// max |xi . v_j| <= delta.
BoundedCaseRecord bounded_case_bound(double delta, const BoundInputs& in);

/// c delta_inf (log d) (|log delta_inf| v 1) / alpha^2; 0 at delta_inf = 0.
double gauss_comparison_bound(double delta_inf, double d, double alpha_sq,
                              double c_user = 1.0);

/// c B^2 (log(d/gamma))^{3/2} (log n) / (alpha^2 sqrt(n)).
double bootstrap_bound(const BoundInputs& in);

struct PriorBounds {
  double cckk;
  double koike;
  bool koike_defined;  // false when sigma_star_sq <= 0; koike set to +inf
};
/// Comparison formulas from prior work, for overlay plots only.
PriorBounds prior_bounds(const BoundInputs& in, double sigma_star_sq);

struct TruncationParams {
  double kappa_n;          // 2 B log n
  double shift;            // 32 B (log n) log(dn) / sqrt(n)
  double tail_prob_bound;  // 2/n
};
TruncationParams truncation_params(double n, double d, double B);

}  // namespace steinclt::bounds
