#include <doctest.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "steinclt/experiment.hpp"
#include "steinclt/normal.hpp"
#include "test_util.hpp"

using namespace steinclt;
using namespace steinclt::experiment;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_SUITE_BEGIN("experiment");

TEST_CASE("innovation transforms have unit variance and the right support") {
  Rng rng(3);
  std::normal_distribution<double> nd;
  for (auto innov : {Innovation::rademacher, Innovation::uniform_pm,
                     Innovation::laplace_unit, Innovation::truncated_normal,
                     Innovation::gaussian}) {
    MeanVar acc;
    double max_abs = 0.0;
    for (int i = 0; i < 400000; ++i) {
      double e = innovation_transform(innov, 2.0, nd(rng));
      acc.add(e);
      max_abs = std::max(max_abs, std::abs(e));
    }
    CHECK(std::abs(acc.mean()) < 4 * acc.stderr_of_mean());
    CHECK(acc.variance() == doctest::Approx(1.0).epsilon(0.02));
    if (innov == Innovation::rademacher) CHECK(max_abs == 1.0);
    if (innov == Innovation::uniform_pm) CHECK(max_abs <= std::sqrt(3.0) + 1e-12);
  }
}

TEST_CASE("b_effective values") {
  auto id3 = corr::validate_and_normalize(MatrixXd::Identity(3, 3));
  auto m = make_data_model(id3, Innovation::rademacher);
  CHECK(m.b_effective == doctest::Approx(1.0));  // max|eps| * max row L1 of I

  // laplace on the identity frame: the exact 1-d Orlicz solution is 2b
  auto ml = make_data_model(id3, Innovation::laplace_unit);
  CHECK(ml.b_effective == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));

  // gaussian: solve exp(l^2/2) Phi(l) = 1 checked directly
  auto mg = make_data_model(id3, Innovation::gaussian);
  double lam = 1.0 / mg.b_effective;
  CHECK(std::exp(0.5 * lam * lam) * normal_cdf(lam) ==
        doctest::Approx(1.0).epsilon(1e-9));

  // bounded scaling with the row 1-norm
  auto eq = corr::validate_and_normalize(testutil::equicorr(3, 0.5));
  auto mb = make_data_model(eq, Innovation::rademacher);
  auto frame = corr::unit_frame(eq);
  double worst = 0;
  for (int j = 0; j < 3; ++j) worst = std::max(worst, frame.chol.row(j).lpNorm<1>());
  CHECK(mb.b_effective == doctest::Approx(worst));
}

TEST_CASE("simulate_W moments") {
  auto eq = corr::validate_and_normalize(testutil::equicorr(3, 0.5));
  auto model = make_data_model(eq, Innovation::rademacher);

  // n = 1 draws are X_1 = L eps_1 with eps entries +-1
  MatrixXd w1 = simulate_W(model, 1, 50, 7);
  for (int r = 0; r < w1.rows(); ++r) {
    VectorXd eps = model.frame.chol.triangularView<Eigen::Lower>().solve(
        w1.row(r).transpose());
    for (int c = 0; c < 3; ++c) CHECK(std::abs(std::abs(eps[c]) - 1.0) < 1e-10);
  }

  // empirical covariance approaches sigma entrywise
  int reps = 50000;
  MatrixXd w = simulate_W(model, 64, reps, 8);
  MatrixXd cov = w.transpose() * w / static_cast<double>(reps);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double se = std::sqrt((1.0 + eq.sigma(j, k) * eq.sigma(j, k)) / reps);
      CHECK(std::abs(cov(j, k) - eq.sigma(j, k)) < 4 * se);
    }
}

TEST_CASE("paired draws couple W and an exact Gaussian") {
  auto eq = corr::validate_and_normalize(testutil::equicorr(3, 0.5));
  auto model = make_data_model(eq, Innovation::rademacher);
  auto pair = simulate_paired(model, 256, 20000, 9);
  // G carries exactly the target covariance in distribution
  MatrixXd cov = pair.g.transpose() * pair.g / 20000.0;
  CHECK((cov - eq.sigma).cwiseAbs().maxCoeff() < 0.05);
  // coupling: per-coordinate correlation near E|Z| = sqrt(2/pi)
  for (int c = 0; c < 3; ++c) {
    double corr_wc = (pair.w.col(c).dot(pair.g.col(c))) / 20000.0;
    CHECK(corr_wc == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(0.05));
  }
  // gaussian innovations make W and G identical draw by draw
  auto mg = make_data_model(eq, Innovation::gaussian);
  auto same = simulate_paired(mg, 64, 200, 10);
  CHECK((same.w - same.g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("truncation is the identity on bounded data below kappa_n") {
  auto eq = corr::validate_and_normalize(testutil::equicorr(4, 0.3));
  auto model = make_data_model(eq, Innovation::rademacher);
  MatrixXd x = simulate_X(model, 200, 11);
  auto tr = truncate_hat(model, x);
  CHECK_FALSE(tr.active);
  CHECK(tr.recenter == 0.0);
  CHECK((tr.x_hat - x).cwiseAbs().maxCoeff() == 0.0);  // bit-exact
  CHECK(tr.x_hat.cwiseAbs().maxCoeff() <= 2.0 * tr.kappa_n);

  // laplace: unbounded, so truncation can engage; the symmetric law keeps
  // the recentering at zero and the result is the zero-outside clipping
  auto ml = make_data_model(eq, Innovation::laplace_unit);
  MatrixXd xl = simulate_X(ml, 5000, 12);
  auto trl = truncate_hat(ml, xl);
  CHECK(trl.recenter == 0.0);
  for (Eigen::Index i = 0; i < xl.rows(); ++i)
    for (Eigen::Index j = 0; j < xl.cols(); ++j) {
      double want = std::abs(xl(i, j)) <= trl.kappa_n ? xl(i, j) : 0.0;
      CHECK(trl.x_hat(i, j) == want);
    }
  // MC check that the truncated mean really vanishes for this law
  MeanVar acc;
  Rng rng(13);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 200000; ++i) {
    double e = innovation_transform(Innovation::laplace_unit, 2.0, nd(rng));
    acc.add(std::abs(e) <= trl.kappa_n ? e : 0.0);
  }
  CHECK(std::abs(acc.mean()) < 4 * acc.stderr_of_mean());
}

TEST_CASE("multiplier bootstrap: degenerate dataset and conditional law") {
  auto eq = corr::validate_and_normalize(testutil::equicorr(3, 0.2));
  MatrixXd same = MatrixXd::Ones(8, 3);
  auto boot = multiplier_bootstrap(same, eq.sigma, 100, 14);
  CHECK(boot.sigma_n.cwiseAbs().maxCoeff() == 0.0);
  CHECK(boot.draws.cwiseAbs().maxCoeff() == 0.0);
  CHECK(boot.delta_n_star == doctest::Approx(1.0));  // |0 - sigma|_inf

  auto model = make_data_model(eq, Innovation::uniform_pm);
  MatrixXd x = simulate_X(model, 64, 15);
  int n_boot = 30000;
  auto b2 = multiplier_bootstrap(x, eq.sigma, n_boot, 16);
  MatrixXd cov = b2.draws.transpose() * b2.draws / static_cast<double>(n_boot);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double v = b2.sigma_n(j, j) * b2.sigma_n(k, k) +
                 b2.sigma_n(j, k) * b2.sigma_n(j, k);
      CHECK(std::abs(cov(j, k) - b2.sigma_n(j, k)) < 4 * std::sqrt(v / n_boot));
    }
  // conditional third moments vanish (the conditional law is Gaussian)
  for (auto [a, b, c] : std::vector<std::array<int, 3>>{{0, 0, 0}, {0, 1, 2}}) {
    MeanVar acc;
    for (int r = 0; r < n_boot; ++r)
      acc.add(b2.draws(r, a) * b2.draws(r, b) * b2.draws(r, c));
    CHECK(std::abs(acc.mean()) < 4 * acc.stderr_of_mean());
  }
}

TEST_CASE("rho_estimate: identical samplers, 1-d oracle, nested dominance") {
  // identical coupled samples give exactly zero
  auto eq = corr::validate_and_normalize(testutil::equicorr(3, 0.5));
  auto model = make_data_model(eq, Innovation::gaussian);
  auto pair = simulate_paired(model, 16, 5000, 17);
  auto fam = RectangleFamily::default_grid(13);
  auto same = rho_estimate(pair.w, pair.g, fam, true);
  CHECK(same.rho_hat == 0.0);
  CHECK(same.family_size == 13u * 13u * 13u);

  // d=1: N(0,1) against N(0.1,1), 121 grid thresholds
  int n = 200000;
  Rng rng(18);
  std::normal_distribution<double> nd;
  MatrixXd p(n, 1), q(n, 1);
  for (int i = 0; i < n; ++i) {
    double z = nd(rng);
    p(i, 0) = z;
    q(i, 0) = z + 0.1;
  }
  auto grid = RectangleFamily::default_grid(121);
  auto r = rho_estimate(p, q, grid, true);
  double exact = normal_cdf(0.05) - normal_cdf(-0.05);
  CHECK(std::abs(r.rho_hat - exact) < 6 * std::max(r.stderr_at_argmax, 1e-4));

  // coarser nested family never increases the estimate (common samples)
  RectangleFamily coarse;
  coarse.kind = RectangleFamily::Kind::grid;
  for (std::size_t i = 0; i < grid.thresholds.size(); i += 2)
    coarse.thresholds.push_back(grid.thresholds[i]);
  auto rc = rho_estimate(p, q, coarse, true);
  CHECK(rc.rho_hat <= r.rho_hat + 1e-15);

  // list families agree with the grid on the same member set in 1-d
  RectangleFamily list;
  list.kind = RectangleFamily::Kind::list;
  for (double th : grid.thresholds) {
    VectorXd b(1);
    b << th;
    list.upper.push_back(b);
  }
  auto rl = rho_estimate(p, q, list, true);
  CHECK(rl.rho_hat == doctest::Approx(r.rho_hat));
}

TEST_CASE("two-sided rectangle members against the 1-d oracle") {
  int n = 200000;
  Rng rng(37);
  std::normal_distribution<double> nd;
  MatrixXd p(n, 1), q(n, 1);
  for (int i = 0; i < n; ++i) {
    double z = nd(rng);
    p(i, 0) = z;
    q(i, 0) = z + 0.2;
  }
  RectangleFamily fam;
  fam.kind = RectangleFamily::Kind::list;
  double best = 0.0;
  for (double a = -2.0; a <= 0.0; a += 0.5)
    for (double b = 0.5; b <= 2.0; b += 0.5) {
      VectorXd lo(1), hi(1);
      lo << a;
      hi << b;
      fam.lower.push_back(lo);
      fam.upper.push_back(hi);
      double diff = std::abs((normal_cdf(b) - normal_cdf(a)) -
                             (normal_cdf(b - 0.2) - normal_cdf(a - 0.2)));
      best = std::max(best, diff);
    }
  auto r = rho_estimate(p, q, fam, true);
  CHECK(std::abs(r.rho_hat - best) < 6 * std::max(r.stderr_at_argmax, 1e-4));
}

TEST_CASE("rho symmetry under argument swap") {
  Rng rng(19);
  std::normal_distribution<double> nd;
  MatrixXd p(50000, 2), q(50000, 2);
  for (int i = 0; i < 50000; ++i)
    for (int c = 0; c < 2; ++c) {
      p(i, c) = nd(rng);
      q(i, c) = 0.9 * nd(rng) + 0.05;
    }
  auto fam = RectangleFamily::default_grid(13);
  auto ab = rho_estimate(p, q, fam, false);
  auto ba = rho_estimate(q, p, fam, false);
  CHECK(ab.rho_hat == doctest::Approx(ba.rho_hat));  // |diff| is symmetric
}

TEST_CASE("factories") {
  auto eq = equicorrelated(5, 0.5);
  CHECK(eq.alpha_sq == doctest::Approx(0.75));
  auto tb = two_block(3, 3, 0.6, 0.1);
  CHECK(tb.sigma(0, 1) == doctest::Approx(0.6));
  CHECK(tb.sigma(0, 4) == doctest::Approx(0.1));

  // near-singular overall while pairs and triples stay non-degenerate
  auto lr = lowrank_ridge(10, 5, 1e-3, 21);
  CHECK(lr.sigma_star_sq < 0.05);
  CHECK(lr.beta_sq > 0.05);
  CHECK(lr.alpha_sq > 0.1);
  CHECK(lr.sigma_star_sq < lr.beta_sq);
}

TEST_CASE("rate study smoke: slope and noise flag") {
  auto model = make_data_model(equicorrelated(3, 0.5), Innovation::rademacher);
  auto fam = RectangleFamily::default_grid(13);
  auto rs = rate_study(model, {64, 128, 256, 512}, 400, fam, 22);
  CHECK(rs.rho_hat.size() == 4);
  CHECK(rs.slope < 0.2);  // decreasing at desk scale
  for (double v : rs.fklz_overlay) CHECK(v > 0);

  // exact gaussian innovations: W == G so every rho is 0 and the fit is
  // flagged as noise-dominated
  auto mg = make_data_model(equicorrelated(3, 0.5), Innovation::gaussian);
  auto rs2 = rate_study(mg, {64, 128, 256, 512}, 200, fam, 23);
  for (double v : rs2.rho_hat) CHECK(v == 0.0);
  CHECK(rs2.noise_dominated);

  CHECK_THROWS_AS(rate_study(model, {64, 128}, 100, fam, 24), ShapeMismatch);
}

TEST_CASE("determinism of simulation layers") {
  auto model = make_data_model(equicorrelated(3, 0.4), Innovation::laplace_unit);
  auto a = simulate_W(model, 32, 50, 77);
  auto b = simulate_W(model, 32, 50, 77);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  auto x1 = simulate_X(model, 100, 78);
  auto x2 = simulate_X(model, 100, 78);
  CHECK((x1 - x2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
