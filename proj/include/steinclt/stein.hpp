#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "steinclt/corr.hpp"
#include "steinclt/gaussint.hpp"
#include "steinclt/mc.hpp"
#include "steinclt/polytope.hpp"

namespace steinclt::stein {

using gaussint::DerivativeCoefficient;
using polytope::DerivedNormals;
using polytope::Polytope;

/// s-integral rule for the semigroup solution: substitute q = exp(-(s - t))
/// and integrate over q in (0, 1] with Gauss-Legendre; contributions past
/// s_cap are dropped (the integrand decays like exp(-s)).
struct QuadSpec {
  int nodes = 64;
  double s_cap = 40.0;
};

/// Gauss-Legendre nodes/weights on (0, 1).
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Semigroup smoothing of the centered polytope indicator:
/// E 1_A(e^{-t} x + sigma_t Z) - E 1_A(Z), common Z draws across both terms.
McEstimate ou_smooth(const Polytope& a, double t, const Eigen::VectorXd& x,
                     std::int64_t n, std::uint64_t seed);

/// Derivative of the semigroup solution at x, contracted against a basis
/// multi-index of order 0..3. The inner spatial derivative is evaluated as an
/// exact Gaussian-derivative integral over the rescaled polytope, never by
/// finite differences.
McEstimate psi_derivative(const Polytope& a, const DerivedNormals& dn, double t,
                          const Eigen::VectorXd& x, const std::vector<int>& multi_index,
                          const QuadSpec& quad, std::int64_t n, std::uint64_t seed);

/// General contracted form of psi_derivative for a full coefficient.
McEstimate psi_contracted(const Polytope& a, const DerivedNormals& dn, double t,
                          const Eigen::VectorXd& x, const DerivativeCoefficient& coeff,
                          const QuadSpec& quad, std::int64_t n, std::uint64_t seed);

/// <I, hess psi_t(w)> - w . grad psi_t(w) - T_t h~(w); zero up to quadrature
/// and MC error. The two derivative terms share facet integrals per node.
McEstimate stein_residual(const Polytope& a, double t, const Eigen::VectorXd& w,
                          const QuadSpec& quad, std::int64_t n, std::uint64_t seed);

/// Empirical mean over kernel samples M of the max over admitted pairs of
/// |v_j' M v_j| + |v_j' M v_jk| + |v_jk' M v_jk|.
double kernel_delta(const std::vector<Eigen::MatrixXd>& samples,
                    const Eigen::MatrixXd& normals, const DerivedNormals& dn);

/// The discrepancy terms of a Gaussian-to-Gaussian comparison, computed both
/// as bilinear forms in the frame and by the closed-form expressions in the
/// correlation entries; the two routes must agree to float accuracy.
struct GaussDeltaTerms {
  Eigen::VectorXd diag_bilinear, diag_closed;        // v_j' M v_j
  Eigen::MatrixXd cross_bilinear, cross_closed;      // v_j' M v_jk
  Eigen::MatrixXd pair_bilinear, pair_closed;        // v_jk' M v_jk
  double max_discrepancy = 0.0;
};
GaussDeltaTerms gauss_delta_terms(const Eigen::MatrixXd& sigma1,
                                  const corr::CorrelationModel& model,
                                  const corr::UnitFrame& frame);

/// The constant kernel sample M = V Sigma1 V' - I of a Gaussian comparison.
Eigen::MatrixXd gauss_kernel_matrix(const Eigen::MatrixXd& sigma1,
                                    const corr::UnitFrame& frame);

}  // namespace steinclt::stein
