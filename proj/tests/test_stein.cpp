#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "steinclt/normal.hpp"
#include "steinclt/stein.hpp"
#include "test_util.hpp"

using namespace steinclt;
using namespace steinclt::stein;
using namespace steinclt::polytope;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec3(double a, double b, double c) {
  VectorXd v(3);
  v << a, b, c;
  return v;
}

double sigma_of(double s) { return std::sqrt(-std::expm1(-2.0 * s)); }

// high-resolution 1-d oracle for half-space {x_1 <= 0} psi-derivatives:
// closed-form integrand in s, 2000-node rule on the q substitution
double halfspace_psi_oracle(int order, double t, double x1) {
  std::vector<double> q, w;
  gauss_legendre_01(2000, q, w);
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double s = t - std::log(q[i]);
    double sg = sigma_of(s);
    double y = std::exp(-s) * x1 / sg;
    double inner = 0.0;
    switch (order) {
      case 1:
        inner = -normal_pdf(y) / sg;
        break;
      case 2:
        inner = y * normal_pdf(y) / (sg * sg);
        break;
      case 3:
        inner = (1.0 - y * y) * normal_pdf(y) / (sg * sg * sg);
        break;
    }
    total += w[i] / q[i] * std::exp(-order * s) * inner;
  }
  return -total;
}

}  // namespace

TEST_SUITE_BEGIN("stein");

TEST_CASE("gauss-legendre rule integrates polynomials") {
  std::vector<double> q, w;
  gauss_legendre_01(16, q, w);
  double s0 = 0, s2 = 0, s7 = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    s0 += w[i];
    s2 += w[i] * q[i] * q[i];
    s7 += w[i] * std::pow(q[i], 7);
  }
  CHECK(s0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s2 == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(s7 == doctest::Approx(1.0 / 8.0).epsilon(1e-13));
}

TEST_CASE("ou_smooth closed forms and range") {
  Polytope h = Polytope::half_space(3, 0, 0.0);
  // x = 0: the half-space through the origin is scale invariant, so the two
  // indicators agree sample by sample
  auto z = ou_smooth(h, 0.5, VectorXd::Zero(3), 20000, 1);
  CHECK(z.value == 0.0);
  CHECK(z.stderr_ == 0.0);

  // 1-d CDF oracle at x = (1,0,0), t = 0.5
  double t = 0.5;
  double expect = normal_cdf(-std::exp(-t) / sigma_of(t)) - 0.5;
  auto v = ou_smooth(h, t, vec3(1, 0, 0), 400000, 2);
  CHECK(std::abs(v.value - expect) < 4 * v.stderr_);
  CHECK(expect == doctest::Approx(-0.27723).epsilon(1e-4));

  // stationarity at large t
  Polytope orth = Polytope::orthant(3);
  auto big = ou_smooth(orth, 50.0, vec3(5, 5, 5), 100000, 3);
  CHECK(std::abs(big.value) < 4 * big.stderr_ + 1e-12);
  CHECK(big.value >= -1.0);
  CHECK(big.value <= 1.0);
}

TEST_CASE("ou_smooth monotone in the region under common draws") {
  // The centered value subtracts the set-dependent stationary measure, so
  // monotonicity in A holds for the smoothed term: restore the stationary
  // part with the same draw stream before comparing.
  Polytope small = Polytope::orthant(3);
  Polytope large = polytope::inflate(small, 0.8);
  VectorXd zero = VectorXd::Zero(3);
  for (int i = 0; i < 5; ++i) {
    VectorXd x = vec3(0.3 * i, -0.2, 0.1 * i);
    std::uint64_t seed = 100 + i;
    auto lo = ou_smooth(small, 0.7, x, 20000, seed);
    auto hi = ou_smooth(large, 0.7, x, 20000, seed);
    auto base_lo = gaussint::mc_region_measure(small, zero, 20000, seed);
    auto base_hi = gaussint::mc_region_measure(large, zero, 20000, seed);
    CHECK(lo.value + base_lo.value <= hi.value + base_hi.value + 1e-15);
  }
}

TEST_CASE("psi_derivative half-space against 1-d oracles") {
  Polytope h = Polytope::half_space(3, 0, 0.0);
  DerivedNormals dn(h.normals);
  QuadSpec quad;

  // order 1 at the origin has the closed form phi(0) asin(e^{-t})
  auto d1 = psi_derivative(h, dn, 1.0, VectorXd::Zero(3), {0}, quad, 1000, 5);
  double closed = normal_pdf(0.0) * std::asin(std::exp(-1.0));
  CHECK(d1.value == doctest::Approx(closed).epsilon(1e-6));
  CHECK(std::abs(d1.value - halfspace_psi_oracle(1, 1.0, 0.0)) < 1e-4);

  VectorXd x = vec3(0.7, -0.3, 0.2);
  for (int order = 1; order <= 3; ++order) {
    std::vector<int> idx(order, 0);
    auto got = psi_derivative(h, dn, 0.5, x, idx, quad, 1000, 6);
    CHECK(std::abs(got.value - halfspace_psi_oracle(order, 0.5, x[0])) < 1e-4);
  }

  // derivatives across a vacuous coordinate vanish
  auto dy = psi_derivative(h, dn, 0.5, x, {1}, quad, 1000, 7);
  CHECK(dy.value == 0.0);
}

TEST_CASE("psi_derivative vanishing and stationary regimes") {
  // e^{-s} x stays deep inside A(-10) for every s >= t only when the offsets
  // exceed 10 + max(v.x, 0); then all density factors are phi(>=10)
  Polytope h = Polytope::half_space(3, 0, 12.0);
  DerivedNormals dn(h.normals);
  QuadSpec quad;
  auto deep = psi_derivative(h, dn, 0.5, vec3(1, 0, 0), {0}, quad, 1000, 8);
  CHECK(std::abs(deep.value) < 1e-8);

  auto late = psi_derivative(h, dn, 50.0, vec3(0.3, 0, 0), {}, quad, 2000, 9);
  CHECK(std::abs(late.value) < 1e-6 + 4 * late.stderr_);
}

TEST_CASE("stein residual on half-space and quadrant") {
  QuadSpec quad;
  Polytope h = Polytope::half_space(2, 0, 0.0);
  VectorXd w(2);
  w << 0.4, -0.1;
  auto res = stein_residual(h, 0.5, w, quad, 200000, 10);
  CHECK(std::abs(res.value) <= 5e-3);

  Polytope quadrant = Polytope::orthant(2);
  VectorXd w2(2);
  w2 << 0.3, -0.7;
  auto res2 = stein_residual(quadrant, 0.5, w2, quad, 200000, 11);
  CHECK(std::abs(res2.value) <= 5e-3);

  auto res3 = stein_residual(quadrant, 50.0, w2, quad, 20000, 12);
  CHECK(std::abs(res3.value) <= 1e-3);
}

TEST_CASE("quadrature and index preconditions") {
  Polytope h = Polytope::half_space(3, 0, 0.0);
  DerivedNormals dn(h.normals);
  QuadSpec too_many;
  too_many.nodes = 100000;
  CHECK_THROWS_AS(
      psi_derivative(h, dn, 0.5, VectorXd::Zero(3), {0}, too_many, 1000, 1),
      QuadratureBudgetExceeded);
  QuadSpec quad;
  CHECK_THROWS_AS(psi_derivative(h, dn, 0.5, VectorXd::Zero(3), {7}, quad, 1000, 1),
                  ShapeMismatch);
  CHECK_THROWS_AS(stein_residual(Polytope::orthant(5), 0.5, VectorXd::Zero(5), quad,
                                 1000, 1),
                  ShapeMismatch);
}

TEST_CASE("kernel delta") {
  MatrixXd id = MatrixXd::Identity(3, 3);
  DerivedNormals dn(id);
  std::vector<MatrixXd> zeros(4, MatrixXd::Zero(3, 3));
  CHECK(kernel_delta(zeros, id, dn) == 0.0);

  std::vector<MatrixXd> one{MatrixXd::Identity(3, 3)};
  CHECK(kernel_delta(one, id, dn) == doctest::Approx(2.0));

  CHECK_THROWS_AS(kernel_delta({}, id, dn), ShapeMismatch);
}

TEST_CASE("gauss delta terms: d=2 hand example") {
  MatrixXd sigma(2, 2), sigma1(2, 2);
  sigma << 1, 0.5, 0.5, 1;
  sigma1 << 1, 0.6, 0.6, 1;
  auto model = corr::validate_and_normalize(sigma);
  auto frame = corr::unit_frame(model);
  auto terms = gauss_delta_terms(sigma1, model, frame);
  CHECK(terms.max_discrepancy < 1e-12);
  CHECK(terms.cross_closed(0, 1) == doctest::Approx(0.1 / std::sqrt(0.75)));
  CHECK(terms.cross_closed(0, 1) == doctest::Approx(0.11547).epsilon(1e-4));
  CHECK(terms.pair_closed(0, 1) == doctest::Approx(-2.0 * 0.5 * 0.1 / 0.75));
  CHECK(terms.pair_closed(0, 1) == doctest::Approx(-0.13333).epsilon(1e-4));
  CHECK(terms.diag_closed[0] == 0.0);

  auto same = gauss_delta_terms(model.sigma, model, frame);
  CHECK(same.diag_bilinear.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(same.cross_bilinear.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(same.pair_bilinear.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gauss delta terms: diagonal perturbation closed form") {
  auto model = corr::validate_and_normalize(testutil::equicorr(3, 0.4));
  auto frame = corr::unit_frame(model);
  MatrixXd sigma1 = model.sigma + 0.01 * MatrixXd::Identity(3, 3);
  auto terms = gauss_delta_terms(sigma1, model, frame);
  CHECK(terms.max_discrepancy < 1e-12);
  CHECK(terms.cross_closed(0, 1) ==
        doctest::Approx(-0.01 * 0.4 / std::sqrt(1 - 0.16)));
}

TEST_CASE("bilinear and closed routes agree on random pairs") {
  Rng rng(13);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int rep = 0; rep < 25; ++rep) {
    int d = 3 + static_cast<int>(rng() % 4);
    auto model = corr::validate_and_normalize(testutil::random_corr(d, rng));
    if (model.sigma_star_sq < 0.05) continue;
    auto frame = corr::unit_frame(model);
    MatrixXd sigma1 = model.sigma;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) {
        double bump = u(rng);
        sigma1(i, j) += bump;
        if (i != j) sigma1(j, i) += bump;
      }
    auto terms = gauss_delta_terms(sigma1, model, frame);
    CHECK(terms.max_discrepancy < 1e-9);

    // the constant-kernel cross-check: kernel_delta of the comparison matrix
    // reproduces the max of the closed-form triples
    DerivedNormals dn(frame.normals);
    MatrixXd m = gauss_kernel_matrix(sigma1, frame);
    double kd = kernel_delta({m}, frame.normals, dn);
    double expect = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        if (j == k || !dn.pair_defined(j, k)) continue;
        expect = std::max(expect, std::abs(terms.diag_closed[j]) +
                                      std::abs(terms.cross_closed(j, k)) +
                                      std::abs(terms.pair_closed(j, k)));
      }
    CHECK(std::abs(kd - expect) < 1e-9);
  }
}

TEST_SUITE_END();
