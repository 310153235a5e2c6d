#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "steinclt/corr.hpp"
#include "steinclt/mc.hpp"

using namespace steinclt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd equicorr(int d, double rho) {
  MatrixXd s = MatrixXd::Constant(d, d, rho);
  s.diagonal().setOnes();
  return s;
}

// random correlation matrix: random orthogonal conjugation of a positive
// spectrum, renormalized to unit diagonal
MatrixXd random_corr(int d, Rng& rng, double min_eig = 0.2) {
  std::normal_distribution<double> nd;
  MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = nd(rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  VectorXd eig(d);
  std::uniform_real_distribution<double> u(min_eig, 2.0);
  for (int i = 0; i < d; ++i) eig[i] = u(rng);
  MatrixXd s = q * eig.asDiagonal() * q.transpose();
  VectorXd isd = s.diagonal().array().sqrt().inverse();
  s = isd.asDiagonal() * s * isd.asDiagonal();
  s = 0.5 * (s + s.transpose().eval());
  s.diagonal().setOnes();
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("corr");

TEST_CASE("identity diagnostics") {
  auto m = corr::validate_and_normalize(MatrixXd::Identity(3, 3));
  CHECK(m.alpha_sq == doctest::Approx(1.0));
  CHECK(m.beta_sq == doctest::Approx(1.0));
  CHECK(m.sigma_star_sq == doctest::Approx(1.0));
}

TEST_CASE("equicorrelated rho=0.5 diagnostics match determinant oracle") {
  double rho = 0.5;
  auto m = corr::validate_and_normalize(equicorr(3, rho));
  // oracle: direct 2x2 / 3x3 determinants and eigenvalues
  double det2 = 1 - rho * rho;
  Eigen::Matrix3d s3 = equicorr(3, rho);
  double ratio = s3.determinant() / det2;
  CHECK(m.alpha_sq == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(m.beta_sq == doctest::Approx(ratio).epsilon(1e-12));
  CHECK(m.beta_sq == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s3);
  CHECK(m.sigma_star_sq == doctest::Approx(es.eigenvalues().minCoeff()));
  CHECK(m.sigma_star_sq == doctest::Approx(0.5));
}

TEST_CASE("duplicated coordinate flags pair degeneracy") {
  MatrixXd s = equicorr(3, 0.0);
  s(0, 1) = s(1, 0) = 1.0;
  auto m = corr::validate_and_normalize(s);
  CHECK(m.alpha_sq == doctest::Approx(0.0));
  CHECK(m.degenerate_pair);
}

TEST_CASE("diagonal rescaling") {
  MatrixXd s(2, 2);
  s << 4.0, 1.0, 1.0, 1.0;
  auto m = corr::validate_and_normalize(s);
  CHECK(m.sigma(0, 0) == 1.0);
  CHECK(m.sigma(1, 1) == 1.0);
  CHECK(m.sigma(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("validation errors") {
  MatrixXd bad(2, 2);
  bad << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(corr::validate_and_normalize(bad), NonSymmetric);
  MatrixXd zero = MatrixXd::Identity(2, 2);
  zero(1, 1) = 0.0;
  CHECK_THROWS_AS(corr::validate_and_normalize(zero), ZeroDiagonal);
  MatrixXd npsd(2, 2);
  npsd << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(corr::validate_and_normalize(npsd), NonPsd);
}

TEST_CASE("triple ratio") {
  auto id = corr::validate_and_normalize(MatrixXd::Identity(4, 4));
  CHECK(corr::triple_ratio(id, 0, 1, 2).value == doctest::Approx(1.0));

  auto eq = corr::validate_and_normalize(equicorr(3, 0.5));
  CHECK(corr::triple_ratio(eq, 0, 1, 2).value == doctest::Approx(2.0 / 3.0));

  // rank-2: third row is a linear combination of the first two
  MatrixXd b(3, 2);
  b << 1, 0, 0, 1, 0.6, 0.8;
  MatrixXd low = b * b.transpose();
  auto m = corr::validate_and_normalize(low);
  auto r = corr::triple_ratio(m, 0, 1, 2);
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_FALSE(r.degenerate_pair);

  // degenerate denominator pair: reported as 0 with the flag set
  MatrixXd dup = equicorr(3, 0.0);
  dup(0, 1) = dup(1, 0) = 1.0;
  auto md = corr::validate_and_normalize(dup);
  auto rd = corr::triple_ratio(md, 0, 1, 2);
  CHECK(rd.value == 0.0);
  CHECK(rd.degenerate_pair);

  CHECK_THROWS_AS(corr::triple_ratio(m, 0, 0, 2), ShapeMismatch);
}

TEST_CASE("unit frame identity and 2x2 hand Cholesky") {
  auto id = corr::validate_and_normalize(MatrixXd::Identity(3, 3));
  auto f = corr::unit_frame(id);
  CHECK((f.normals - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

  double rho = 0.37;
  auto m2 = corr::validate_and_normalize(equicorr(2, rho));
  auto f2 = corr::unit_frame(m2);
  CHECK(f2.normal(0)[0] == doctest::Approx(1.0));
  CHECK(f2.normal(0)[1] == doctest::Approx(0.0));
  CHECK(f2.normal(1)[0] == doctest::Approx(rho));
  CHECK(f2.normal(1)[1] == doctest::Approx(std::sqrt(1 - rho * rho)));
  CHECK(std::acos(f2.normal(0).dot(f2.normal(1))) == doctest::Approx(std::acos(rho)));
}

TEST_CASE("frame gram matrix reproduces sigma") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    int d = 3 + static_cast<int>(rng() % 6);
    auto m = corr::validate_and_normalize(random_corr(d, rng));
    if (m.sigma_star_sq <= 1e-10) continue;
    auto f = corr::unit_frame(m);
    for (int j = 0; j < d; ++j) {
      CHECK(f.normal(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
      for (int k = 0; k < d; ++k)
        CHECK(f.normal(j).dot(f.normal(k)) ==
              doctest::Approx(m.sigma(j, k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("equicorrelated frame keeps pairwise dots") {
  auto m = corr::validate_and_normalize(equicorr(3, 0.5));
  auto f = corr::unit_frame(m);
  CHECK(f.normal(1).dot(f.normal(2)) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("perturb_to_full_rank") {
  MatrixXd b(3, 2);
  b << 1, 0, 0, 1, 0.6, 0.8;
  auto low = corr::validate_and_normalize(MatrixXd(b * b.transpose()));
  CHECK(low.sigma_star_sq < 1e-12);
  double eps = 1e-4;
  auto fixed = corr::perturb_to_full_rank(low, eps);
  CHECK(fixed.sigma_star_sq >= eps * eps / (1 + eps * eps) * (1 - 1e-6));
  for (int j = 0; j < 3; ++j) CHECK(fixed.sigma(j, j) == 1.0);

  auto id = corr::validate_and_normalize(MatrixXd::Identity(3, 3));
  auto same = corr::perturb_to_full_rank(id, 1e-4);
  CHECK((same.sigma - id.sigma).cwiseAbs().maxCoeff() < 1e-14);

  auto full = corr::validate_and_normalize(equicorr(3, 0.3));
  auto near = corr::perturb_to_full_rank(full, 0.0);  // treated as 1e-12 floor
  CHECK((near.sigma - full.sigma).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("min_angles identity and equicorrelated") {
  auto id = corr::validate_and_normalize(MatrixXd::Identity(3, 3));
  auto ma = corr::min_angles(corr::unit_frame(id));
  CHECK(ma.alpha_angle == doctest::Approx(M_PI / 2));
  CHECK(ma.beta_angle == doctest::Approx(M_PI / 2));

  auto eq = corr::validate_and_normalize(equicorr(3, 0.5));
  auto f = corr::unit_frame(eq);
  auto ma2 = corr::min_angles(f);
  CHECK(std::pow(std::sin(ma2.alpha_angle), 2) ==
        doctest::Approx(eq.alpha_sq).epsilon(1e-8));
  CHECK(std::pow(std::sin(ma2.beta_angle), 2) ==
        doctest::Approx(eq.beta_sq).epsilon(1e-8));
  CHECK(std::pow(std::sin(ma2.beta_angle), 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));

  CHECK_THROWS_AS(corr::min_angles(corr::unit_frame(
                      corr::validate_and_normalize(MatrixXd::Identity(2, 2)))),
                  DimensionTooSmall);
}

TEST_CASE("pair angle for rho=0.5 embedded pair") {
  auto m = corr::validate_and_normalize(equicorr(2, 0.5));
  auto f = corr::unit_frame(m);
  double angle = std::acos(std::abs(f.normal(0).dot(f.normal(1))));
  CHECK(angle == doctest::Approx(M_PI / 3));
}

TEST_CASE("cov_gap") {
  MatrixXd a = equicorr(3, 0.2), b = a;
  CHECK(corr::cov_gap(a, b) == 0.0);
  b(0, 1) += 0.01;
  CHECK(corr::cov_gap(a, b) == doctest::Approx(0.01));
  CHECK_THROWS_AS(corr::cov_gap(a, MatrixXd::Identity(2, 2)), ShapeMismatch);

  Rng rng(3);
  std::normal_distribution<double> nd;
  MatrixXd x(4, 4), y(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      x(i, j) = nd(rng);
      y(i, j) = nd(rng);
    }
  double brute = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) brute = std::max(brute, std::abs(x(i, j) - y(i, j)));
  CHECK(corr::cov_gap(x, y) == doctest::Approx(brute));
}

TEST_CASE("randomized invariants over 1000 matrices") {
  Rng rng(11);
  int checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    int d = 3 + static_cast<int>(rng() % 5);
    auto m = corr::validate_and_normalize(random_corr(d, rng, 0.05));
    ++checked;
    // alpha identity: 1 - max |sigma_jk|^2
    double worst = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k)
        worst = std::max(worst, m.sigma(j, k) * m.sigma(j, k));
    CHECK(m.alpha_sq == doctest::Approx(1.0 - worst).epsilon(1e-12));
    CHECK(m.sigma_star_sq <= m.alpha_sq + 1e-10);
    CHECK(m.alpha_sq >= m.beta_sq - 1e-12);
  }
  CHECK(checked == 1000);
}

TEST_SUITE_END();
