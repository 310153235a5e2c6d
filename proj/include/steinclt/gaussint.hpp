#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "steinclt/mc.hpp"
#include "steinclt/polytope.hpp"
#include "steinclt/tensor3.hpp"

namespace steinclt::gaussint {

using polytope::DerivedNormals;
using polytope::FacetIndex;
using polytope::Polytope;

/// Coefficient contracted against the r-th derivative of the Gaussian
/// density: a vector (r=1), a matrix (r=2) or an order-3 tensor (r=3).
struct DerivativeCoefficient {
  int order = 1;
  Eigen::VectorXd u;
  Eigen::MatrixXd m;
  Tensor3 t;

  static DerivativeCoefficient grad(const Eigen::VectorXd& u0) {
    DerivativeCoefficient c;
    c.order = 1;
    c.u = u0;
    return c;
  }
  static DerivativeCoefficient hess(const Eigen::MatrixXd& m0) {
    DerivativeCoefficient c;
    c.order = 2;
    c.m = m0;
    return c;
  }
  static DerivativeCoefficient third(const Tensor3& t0) {
    DerivativeCoefficient c;
    c.order = 3;
    c.t = t0;
    return c;
  }
};

struct BandRegion {
  Polytope a;
  double kappa;
};
struct ConeRegion {
  Polytope a;
  FacetIndex f;
};
struct WedgeRegion {
  Polytope a;
  FacetIndex f;
  std::vector<Eigen::VectorXd> directions;
};
using Region = std::variant<Polytope, BandRegion, ConeRegion, WedgeRegion>;

/// P(Z + shift in region), Z ~ N(0, I_d), by direct sampling.
McEstimate mc_region_measure(const Region& region, const Eigen::VectorXd& shift,
                             std::int64_t n, std::uint64_t seed);

/// Integral of phi_d(z - shift) over the facet F_j: exact density factor along
/// v_j times a sampled (d-1)-dimensional residual probability.
McEstimate facet_surface_integral(const Polytope& a, int j, const Eigen::VectorXd& shift,
                                  std::int64_t n, std::uint64_t seed);

/// Same for a ridge F_jk (level 2) or corner F_jkl (level 3): product of
/// exact density factors at the affine-hull distance times a residual
/// Gaussian probability in the orthogonal completion.
McEstimate ridge_surface_integral(const Polytope& a, const FacetIndex& f,
                                  const Eigen::VectorXd& shift, std::int64_t n,
                                  std::uint64_t seed);

/// Divergence-theorem value of the integral of <u, grad phi(z - shift)> over A.
McEstimate grad_integral(const Polytope& a, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& shift, std::int64_t n,
                         std::uint64_t seed);

/// Facet + ridge decomposition of the integral of <M, hessian phi> over A.
McEstimate hessian_integral(const Polytope& a, const DerivedNormals& dn,
                            const Eigen::MatrixXd& m, std::int64_t n, std::uint64_t seed,
                            const Eigen::VectorXd* shift = nullptr);

/// Five-term facet/ridge/corner decomposition of the integral of
/// <T, third-derivative of phi> over A.
McEstimate third_integral(const Polytope& a, const DerivedNormals& dn, const Tensor3& t,
                          std::int64_t n, std::uint64_t seed,
                          const Eigen::VectorXd* shift = nullptr);

/// Brute-force oracle: E[1_A(Z + shift) h(Z)] with h the Hermite form of the
/// derivative contraction. Independent of the decomposition path.
McEstimate volume_integral_oracle(const Polytope& a, const DerivativeCoefficient& coeff,
                                  const Eigen::VectorXd& shift, std::int64_t n,
                                  std::uint64_t seed);

McEstimate shifted_grad_integral(const Polytope& a, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& x, std::int64_t n,
                                 std::uint64_t seed);
McEstimate shifted_third_integral(const Polytope& a, const DerivedNormals& dn,
                                  const Tensor3& t, const Eigen::VectorXd& x,
                                  std::int64_t n, std::uint64_t seed);

/// Right-hand sides of the derivative-integral bounds with C = 1.
/// Order 3 requires positive angle floors (throws ZeroAngle otherwise).
double aht_bound_rhs(int order, const Eigen::MatrixXd& normals, const DerivedNormals& dn,
                     const DerivativeCoefficient& coeff, double alpha_angle,
                     double beta_angle);

/// Out-of-band bounds: d phi_1(kappa) max |u.v| (order 1) and
/// d^3 exp(-kappa^2/4) max |u1.v1||u2.v2||u3.v3| (order 3, C = 1).
double vanish_bound_rhs_order1(const Polytope& a, double kappa, const Eigen::VectorXd& u);
double vanish_bound_rhs_order3(const Polytope& a, const DerivedNormals& dn, double kappa,
                               const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                               const Eigen::VectorXd& u3);

struct NazarovCheck {
  McEstimate lhs;  // band probability P(A(eps)) - P(A), common random numbers
  double rhs = 0.0;
};
NazarovCheck nazarov_check(const Eigen::MatrixXd& normals, const Eigen::VectorXd& b,
                           double eps, std::int64_t n, std::uint64_t seed,
                           double sigma_lower = 1.0);

struct CornerConeCheck {
  bool applicable = false;  // dist(0, F_jkl) <= sqrt(6 log d)
  McEstimate lhs;           // corner surface integral
  McEstimate cone_measure;  // gamma_d(S_jkl)
  double rhs_scale = 0.0;   // (log d)^{3/2} / (alpha beta)
  double rhs = 0.0;
  double ratio = 0.0;       // lhs / rhs, the empirical constant
};
CornerConeCheck corner_cone_inequality_check(const Polytope& a, const DerivedNormals& dn,
                                             int j, int k, int l, double alpha_angle,
                                             double beta_angle, std::int64_t n,
                                             std::uint64_t seed);

}  // namespace steinclt::gaussint
