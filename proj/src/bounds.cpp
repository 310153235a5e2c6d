#include "steinclt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace steinclt::bounds {

namespace {

double log_or_one(double x) { return std::max(std::abs(std::log(x)), 1.0); }

}  // namespace

void BoundInputs::validate() const {
  if (n < 3 || d < 3) throw ShapeMismatch("bounds need n, d >= 3");
  if (!(B > 0.0)) throw ShapeMismatch("B must be > 0");
  if (!(alpha_sq > 0.0 && alpha_sq <= 1.0)) throw ZeroAlpha("alpha_sq must be in (0,1]");
  if (beta_sq < 0.0 || beta_sq > 1.0) throw ZeroBeta("beta_sq must be in [0,1]");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ShapeMismatch("gamma must be in (0,1)");
}

double fklz_bound(const BoundInputs& in) {
  in.validate();
  if (!(in.beta_sq > 0.0)) throw ZeroBeta("fklz_bound needs beta_sq > 0");
  double ld = std::log(in.d), ln = std::log(in.n);
  double first = in.cov_gap * ld * ln / in.alpha_sq;
  double second = std::pow(in.B, 3.0) * ld * ld * std::sqrt(std::log(in.d * in.n)) *
                  std::pow(ln, 4.0) / (in.alpha_sq * in.beta_sq * std::sqrt(in.n));
  return in.c_user * (first + second);
}

BoundedCaseRecord bounded_case_bound(double delta, const BoundInputs& in) {
  in.validate();
  if (!(in.beta_sq > 0.0)) throw ZeroBeta("bounded_case_bound needs beta_sq > 0");
  if (!(delta > 0.0)) throw ShapeMismatch("delta must be > 0");
  double ld = std::log(in.d);
  BoundedCaseRecord r{};
  r.delta0 = ld * in.cov_gap;
  r.delta1 = std::pow(ld, 1.5) * in.n * delta * delta * delta;
  double ratio = r.delta1 / (in.alpha_sq * in.beta_sq);
  r.delta2 = ratio * ratio + delta * delta * ld;
  double t0_raw = std::pow(2.0 * in.c_user * ratio, 2.0);
  r.t0_clamped = t0_raw >= 0.5;
  r.t0 = std::min(t0_raw, 0.5);
  r.t = r.t0 + delta * delta * ld;
  r.kappa = std::sqrt(12.0 * ld - 2.0 * std::log(-std::expm1(-r.t))) +
            1.0 / std::sqrt(2.0 * ld);
  double l2 = log_or_one(r.delta2);
  r.bound = in.c_user * (r.delta0 / in.alpha_sq * l2 +
                         ratio * (ld * l2 + std::sqrt(ld) * std::pow(l2, 1.5)) +
                         delta * std::pow(ld, 1.5));
  return r;
}

double gauss_comparison_bound(double delta_inf, double d, double alpha_sq,
                              double c_user) {
  if (!(alpha_sq > 0.0)) throw ZeroAlpha("gauss_comparison_bound needs alpha_sq > 0");
  if (delta_inf == 0.0) return 0.0;
  return c_user * delta_inf * std::log(d) * log_or_one(delta_inf) / alpha_sq;
}

double bootstrap_bound(const BoundInputs& in) {
  in.validate();
  return in.c_user * in.B * in.B * std::pow(std::log(in.d / in.gamma), 1.5) *
         std::log(in.n) / (in.alpha_sq * std::sqrt(in.n));
}

PriorBounds prior_bounds(const BoundInputs& in, double sigma_star_sq) {
  in.validate();
  PriorBounds p{};
  p.cckk = in.c_user * std::sqrt(in.B) / std::pow(in.n, 0.25) *
           std::pow(std::log(in.d * in.n), 1.25);
  if (sigma_star_sq > 0.0) {
    p.koike = in.c_user * in.B / (sigma_star_sq * std::sqrt(in.n)) *
              std::pow(std::log(in.d), 1.5) * std::log(in.n);
    p.koike_defined = true;
  } else {
    p.koike = std::numeric_limits<double>::infinity();
    p.koike_defined = false;
  }
  return p;
}

TruncationParams truncation_params(double n, double d, double B) {
  if (n < 3) throw ShapeMismatch("truncation_params needs n >= 3");
  if (!(B > 0.0)) throw ShapeMismatch("B must be > 0");
  TruncationParams t{};
  t.kappa_n = 2.0 * B * std::log(n);
  t.shift = 32.0 * B * std::log(n) * std::log(d * n) / std::sqrt(n);
  t.tail_prob_bound = 2.0 / n;
  return t;
}

}  // namespace steinclt::bounds
