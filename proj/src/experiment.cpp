#include "steinclt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "steinclt/bounds.hpp"
#include "steinclt/errors.hpp"
#include "steinclt/normal.hpp"

namespace steinclt::experiment {

namespace {

constexpr double kLaplaceScale = 0.70710678118654752440;  // variance 1

double truncated_normal_sd(double c) {
  double z = 2.0 * normal_cdf(c) - 1.0;
  return std::sqrt(1.0 - 2.0 * c * normal_pdf(c) / z);
}

double laplace_quantile(double u) {
  // u can round to exactly 0 or 1 for |z| beyond ~8.3; clamp one ulp inside
  double v = std::clamp(u - 0.5, -0.49999999999999994, 0.49999999999999994);
  return -kLaplaceScale * (v < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(v));
}

/// Max |value| of the law; +inf for unbounded laws.
double innovation_max_abs(Innovation innov, double trunc_c) {
  switch (innov) {
    case Innovation::rademacher:
      return 1.0;
    case Innovation::uniform_pm:
      return std::sqrt(3.0);
    case Innovation::truncated_normal:
      return trunc_c / truncated_normal_sd(trunc_c);
    default:
      return std::numeric_limits<double>::infinity();
  }
}

/// Orlicz scale for one coordinate of X = L eps. Bounded laws use the row
/// 1-norm bound; laplace uses the product moment-generating bound solved by
/// bisection; gaussian coordinates are exactly N(0,1).
double compute_b_effective(const corr::UnitFrame& frame, Innovation innov,
                           double trunc_c) {
  const Eigen::MatrixXd& l = frame.chol;
  double max_row_l1 = 0.0;
  for (int j = 0; j < frame.dim; ++j) max_row_l1 = std::max(max_row_l1, l.row(j).lpNorm<1>());

  double cap = innovation_max_abs(innov, trunc_c);
  if (std::isfinite(cap)) return cap * max_row_l1;

  if (innov == Innovation::gaussian) {
    // solve E exp(lambda |Z|) = 2 exp(lambda^2/2) Phi(lambda) = 2
    double lo = 0.0, hi = 2.0;
    for (int it = 0; it < 200; ++it) {
      double lam = 0.5 * (lo + hi);
      double v = std::exp(0.5 * lam * lam) * normal_cdf(lam);
      (v < 1.0 ? lo : hi) = lam;
    }
    return 1.0 / (0.5 * (lo + hi));
  }

  // laplace: E exp(|X_j|/B) <= prod_k (1 - |L_jk| b / B)^{-1}, decreasing in B
  auto orlicz = [&](double b_scale) {
    double worst = 0.0;
    for (int j = 0; j < frame.dim; ++j) {
      double v = 1.0;
      for (int k = 0; k <= j; ++k) {
        double c = std::abs(l(j, k)) * kLaplaceScale / b_scale;
        if (c >= 1.0) return std::numeric_limits<double>::infinity();
        v /= 1.0 - c;
      }
      worst = std::max(worst, v);
    }
    return worst;
  };
  double lo = kLaplaceScale * l.cwiseAbs().maxCoeff() * (1.0 + 1e-12);
  double hi = std::max(1.0, 2.0 * lo);
  while (orlicz(hi) > 2.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (orlicz(mid) > 2.0 ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

Innovation innovation_from_string(const std::string& name) {
  if (name == "rademacher") return Innovation::rademacher;
  if (name == "uniform_pm" || name == "uniform") return Innovation::uniform_pm;
  if (name == "laplace_unit" || name == "laplace") return Innovation::laplace_unit;
  if (name == "truncated_normal") return Innovation::truncated_normal;
  if (name == "gaussian") return Innovation::gaussian;
  throw ShapeMismatch("unknown innovation law: " + name);
}

std::string to_string(Innovation innov) {
  switch (innov) {
    case Innovation::rademacher: return "rademacher";
    case Innovation::uniform_pm: return "uniform_pm";
    case Innovation::laplace_unit: return "laplace_unit";
    case Innovation::truncated_normal: return "truncated_normal";
    case Innovation::gaussian: return "gaussian";
  }
  return "?";
}

double innovation_transform(Innovation innov, double trunc_c, double z) {
  switch (innov) {
    case Innovation::gaussian:
      return z;
    case Innovation::rademacher:
      return z >= 0.0 ? 1.0 : -1.0;
    case Innovation::uniform_pm:
      return std::sqrt(3.0) * (2.0 * normal_cdf(z) - 1.0);
    case Innovation::laplace_unit:
      return laplace_quantile(normal_cdf(z));
    case Innovation::truncated_normal: {
      double lo = normal_cdf(-trunc_c);
      double u = lo + (1.0 - 2.0 * lo) * normal_cdf(z);
      return normal_quantile(u) / truncated_normal_sd(trunc_c);
    }
  }
  return 0.0;
}

DataModel make_data_model(const corr::CorrelationModel& sigma, Innovation innovation,
                          double trunc_c) {
  DataModel m;
  m.sigma = sigma;
  m.frame = corr::unit_frame(sigma);
  m.innovation = innovation;
  m.trunc_c = trunc_c;
  m.b_effective = compute_b_effective(m.frame, innovation, trunc_c);
  return m;
}

corr::CorrelationModel equicorrelated(int d, double rho) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(d, d, rho);
  s.diagonal().setOnes();
  return corr::validate_and_normalize(s);
}

corr::CorrelationModel two_block(int d1, int d2, double rho_within, double rho_cross) {
  int d = d1 + d2;
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      bool same = (i < d1) == (j < d1);
      s(i, j) = i == j ? 1.0 : (same ? rho_within : rho_cross);
    }
  return corr::validate_and_normalize(s);
}

corr::CorrelationModel lowrank_ridge(int d, int rank, double eps, std::uint64_t seed) {
  if (rank < 3 || rank >= d) throw ShapeMismatch("lowrank_ridge needs 3 <= rank < d");
  // keep the candidate loading set with the largest triple floor, so the
  // pair/triple diagnostics stay away from 0 while sigma_star^2 ~ eps
  corr::CorrelationModel best;
  double best_beta = -1.0;
  for (std::uint64_t attempt = 0; attempt < 20; ++attempt) {
    Rng rng(derive_seed(seed, 0x10u, attempt));
    std::normal_distribution<double> nd;
    Eigen::MatrixXd p(d, rank);
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd row(rank);
      for (int c = 0; c < rank; ++c) row[c] = nd(rng);
      p.row(i) = row.normalized();
    }
    Eigen::MatrixXd s = (1.0 - eps) * (p * p.transpose());
    s += eps * Eigen::MatrixXd::Identity(d, d);
    s.diagonal().setOnes();
    auto cand = corr::validate_and_normalize(s);
    if (cand.beta_sq > best_beta) {
      best_beta = cand.beta_sq;
      best = cand;
    }
  }
  return best;
}

Eigen::MatrixXd simulate_W(const DataModel& model, std::int64_t n, int reps,
                           std::uint64_t seed) {
  return simulate_paired(model, n, reps, seed).w;
}

PairedDraws simulate_paired(const DataModel& model, std::int64_t n, int reps,
                            std::uint64_t seed) {
  if (n < 1) throw ShapeMismatch("simulate: n must be >= 1");
  const int d = model.sigma.dim;
  PairedDraws out;
  out.w.resize(reps, d);
  out.g.resize(reps, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, 0xE1u, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> nd;
    Eigen::VectorXd sum_eps = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sum_z = Eigen::VectorXd::Zero(d);
    for (std::int64_t i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) {
        double z = nd(rng);
        sum_z[c] += z;
        sum_eps[c] += innovation_transform(model.innovation, model.trunc_c, z);
      }
    out.w.row(r) = (model.frame.chol * sum_eps * scale).transpose();
    out.g.row(r) = (model.frame.chol * sum_z * scale).transpose();
  }
  return out;
}

Eigen::MatrixXd simulate_X(const DataModel& model, std::int64_t n, std::uint64_t seed) {
  const int d = model.sigma.dim;
  Eigen::MatrixXd x(n, d);
  Rng rng(derive_seed(seed, 0xDA7Au));
  std::normal_distribution<double> nd;
  Eigen::VectorXd eps(d);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c)
      eps[c] = innovation_transform(model.innovation, model.trunc_c, nd(rng));
    x.row(i) = (model.frame.chol * eps).transpose();
  }
  return x;
}

Eigen::MatrixXd gaussian_draws(const corr::UnitFrame& frame, int reps,
                               std::uint64_t seed) {
  Eigen::MatrixXd g(reps, frame.dim);
  Rng rng(derive_seed(seed, 0x6A55u));
  std::normal_distribution<double> nd;
  Eigen::VectorXd z(frame.dim);
  for (int r = 0; r < reps; ++r) {
    for (int c = 0; c < frame.dim; ++c) z[c] = nd(rng);
    g.row(r) = (frame.chol * z).transpose();
  }
  return g;
}

TruncationResult truncate_hat(const DataModel& model, const Eigen::MatrixXd& x) {
  TruncationResult out;
  const auto n = x.rows();
  out.kappa_n =
      bounds::truncation_params(static_cast<double>(n), model.sigma.dim,
                                model.b_effective)
          .kappa_n;
  // every menu law is symmetric, so X_ij is symmetric and the recentering
  // expectation E[X 1{|X| <= kappa}] vanishes exactly
  out.recenter = 0.0;
  out.x_hat = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (std::abs(x(i, j)) > out.kappa_n) {
        out.x_hat(i, j) = 0.0;
        out.active = true;
      }
  out.w_hat = out.x_hat.colwise().sum().transpose() /
              std::sqrt(static_cast<double>(n));
  return out;
}

BootstrapResult multiplier_bootstrap(const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& sigma, int n_boot,
                                     std::uint64_t seed) {
  const auto n = x.rows();
  if (n < 3) throw ShapeMismatch("multiplier_bootstrap: n must be >= 3");
  if (n_boot < 1) throw ShapeMismatch("multiplier_bootstrap: n_boot must be >= 1");
  const int d = static_cast<int>(x.cols());
  BootstrapResult out;
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean;
  out.sigma_n = centered.transpose() * centered / static_cast<double>(n);
  out.delta_n_star = (out.sigma_n - sigma).cwiseAbs().maxCoeff();
  out.draws.resize(n_boot, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::VectorXd xi(n);
  for (int r = 0; r < n_boot; ++r) {
    Rng rng(derive_seed(seed, 0xB007u, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = nd(rng);
    out.draws.row(r) = (centered.transpose() * xi * scale).transpose();
  }
  return out;
}

RectangleFamily RectangleFamily::default_grid(int per_axis, double lo, double hi) {
  RectangleFamily f;
  f.kind = Kind::grid;
  f.thresholds.resize(per_axis);
  for (int i = 0; i < per_axis; ++i)
    f.thresholds[i] = lo + (hi - lo) * i / (per_axis - 1);
  return f;
}

RectangleFamily RectangleFamily::random_family(int d, int count, std::uint64_t seed) {
  RectangleFamily f;
  f.kind = Kind::list;
  Rng rng(derive_seed(seed, 0xFA3u));
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd b(d);
    for (int c = 0; c < d; ++c) b[c] = normal_quantile(u(rng));
    f.upper.push_back(b);
  }
  return f;
}

std::size_t RectangleFamily::size(int d) const {
  if (kind == Kind::grid) {
    std::size_t s = 1;
    for (int i = 0; i < d; ++i) s *= thresholds.size();
    return s;
  }
  return upper.size();
}

namespace {

struct GridHist {
  // cumulative counts over the grid cells: entry c = #samples <= b(c)
  std::vector<std::int64_t> cells;
  std::int64_t n = 0;
  std::int64_t dims = 0;
  int per_axis = 0;
};

GridHist grid_cumulative(const Eigen::MatrixXd& samples,
                         const std::vector<double>& thr, int d) {
  GridHist h;
  h.per_axis = static_cast<int>(thr.size());
  h.dims = d;
  h.n = samples.rows();
  std::size_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= h.per_axis;
  h.cells.assign(cells, 0);
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    std::size_t idx = 0;
    bool in = true;
    for (int c = d - 1; c >= 0; --c) {
      auto it = std::lower_bound(thr.begin(), thr.end(), samples(r, c));
      if (it == thr.end()) {
        in = false;
        break;
      }
      idx = idx * h.per_axis + static_cast<std::size_t>(it - thr.begin());
    }
    if (in) ++h.cells[idx];
  }
  // prefix sums along each axis turn bin counts into cumulative counts
  std::size_t stride = 1;
  for (int axis = 0; axis < d; ++axis) {
    for (std::size_t i = 0; i < h.cells.size(); ++i) {
      std::size_t coord = (i / stride) % h.per_axis;
      if (coord > 0) h.cells[i] += h.cells[i - stride];
    }
    stride *= h.per_axis;
  }
  return h;
}

RhoResult rho_grid(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                   const RectangleFamily& fam, bool coupled) {
  const int d = static_cast<int>(p.cols());
  if (fam.size(d) > 5'000'000)
    throw ShapeMismatch("grid family too large; use a random family");
  GridHist hp = grid_cumulative(p, fam.thresholds, d);
  GridHist hq = grid_cumulative(q, fam.thresholds, d);
  GridHist hboth;
  coupled = coupled && p.rows() == q.rows();
  if (coupled) {
    // P(both <= b) is the cumulative law of the componentwise max
    Eigen::MatrixXd mx = p.cwiseMax(q);
    hboth = grid_cumulative(mx, fam.thresholds, d);
  }
  RhoResult out;
  out.family_size = fam.size(d);
  double np = static_cast<double>(hp.n), nq = static_cast<double>(hq.n);
  std::size_t best = 0;
  for (std::size_t i = 0; i < hp.cells.size(); ++i) {
    double diff = std::abs(hp.cells[i] / np - hq.cells[i] / nq);
    if (diff > out.rho_hat) {
      out.rho_hat = diff;
      best = i;
    }
  }
  double pp = hp.cells[best] / np, qq = hq.cells[best] / nq;
  if (coupled) {
    double rr = hboth.cells[best] / np;
    double var = std::max(pp + qq - 2.0 * rr - (pp - qq) * (pp - qq), 0.0);
    out.stderr_at_argmax = std::sqrt(var / np);
  } else {
    out.stderr_at_argmax = std::sqrt(pp * (1 - pp) / np + qq * (1 - qq) / nq);
  }
  out.argmax_upper.resize(d);
  std::size_t rem = best;
  for (int c = 0; c < d; ++c) {
    out.argmax_upper[c] = fam.thresholds[rem % hp.per_axis];
    rem /= hp.per_axis;
  }
  return out;
}

RhoResult rho_list(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                   const RectangleFamily& fam, bool coupled) {
  const int d = static_cast<int>(p.cols());
  coupled = coupled && p.rows() == q.rows();
  const bool two_sided = !fam.lower.empty();
  if (two_sided && fam.lower.size() != fam.upper.size())
    throw ShapeMismatch("lower/upper member counts differ");
  auto inside = [&](const Eigen::MatrixXd& s, Eigen::Index r, std::size_t m) {
    for (int c = 0; c < d; ++c) {
      if (s(r, c) > fam.upper[m][c]) return false;
      if (two_sided && s(r, c) < fam.lower[m][c]) return false;
    }
    return true;
  };
  RhoResult out;
  out.family_size = fam.upper.size();
  std::size_t best = 0;
  double best_pp = 0, best_qq = 0, best_rr = 0;
  for (std::size_t m = 0; m < fam.upper.size(); ++m) {
    std::int64_t cp = 0, cq = 0, cboth = 0;
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      if (inside(p, r, m)) ++cp;
    for (Eigen::Index r = 0; r < q.rows(); ++r)
      if (inside(q, r, m)) ++cq;
    if (coupled)
      for (Eigen::Index r = 0; r < p.rows(); ++r)
        if (inside(p, r, m) && inside(q, r, m)) ++cboth;
    double pp = cp / static_cast<double>(p.rows());
    double qq = cq / static_cast<double>(q.rows());
    double diff = std::abs(pp - qq);
    if (m == 0 || diff > out.rho_hat) {
      out.rho_hat = diff;
      best = m;
      best_pp = pp;
      best_qq = qq;
      best_rr = cboth / static_cast<double>(p.rows());
    }
  }
  if (coupled) {
    double var = std::max(
        best_pp + best_qq - 2.0 * best_rr - (best_pp - best_qq) * (best_pp - best_qq),
        0.0);
    out.stderr_at_argmax = std::sqrt(var / static_cast<double>(p.rows()));
  } else {
    out.stderr_at_argmax =
        std::sqrt(best_pp * (1 - best_pp) / static_cast<double>(p.rows()) +
                  best_qq * (1 - best_qq) / static_cast<double>(q.rows()));
  }
  out.argmax_upper = fam.upper[best];
  return out;
}

}  // namespace

RhoResult rho_estimate(const Eigen::MatrixXd& samples_p, const Eigen::MatrixXd& samples_q,
                       const RectangleFamily& family, bool coupled) {
  if (samples_p.cols() != samples_q.cols())
    throw ShapeMismatch("rho_estimate: sample dimensions differ");
  if (samples_p.rows() == 0 || samples_q.rows() == 0)
    throw ShapeMismatch("rho_estimate: empty samples");
  if (family.kind == RectangleFamily::Kind::grid)
    return rho_grid(samples_p, samples_q, family, coupled);
  return rho_list(samples_p, samples_q, family, coupled);
}

namespace {

/// Quantile of the sum of n iid +-1 signs (a shifted symmetric binomial),
/// with the upper half mirrored so both tails keep full precision.
class SignSumQuantile {
 public:
  explicit SignSumQuantile(std::int64_t n) : n_(n), cdf_(n + 1) {
    const double ln2 = std::log(2.0);
    double run = 0.0;
    for (std::int64_t k = 0; k <= n / 2; ++k) {
      double lp = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0) - n * ln2;
      run += std::exp(lp);
      cdf_[k] = std::min(run, 1.0);
    }
    for (std::int64_t k = n / 2 + 1; k <= n; ++k)
      cdf_[k] = 1.0 - (n - k - 1 >= 0 ? cdf_[n - k - 1] : 0.0);
  }

  double operator()(double u) const {
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    std::int64_t k = it == cdf_.end() ? n_ : (it - cdf_.begin());
    return 2.0 * static_cast<double>(k) - static_cast<double>(n_);
  }

 private:
  std::int64_t n_;
  std::vector<double> cdf_;
};

}  // namespace

RateStudyResult rate_study(const DataModel& model, std::vector<std::int64_t> n_grid,
                           int reps, const RectangleFamily& family, std::uint64_t seed) {
  if (n_grid.size() < 4) throw ShapeMismatch("rate_study: need >= 4 grid points");
  std::sort(n_grid.begin(), n_grid.end());
  const int d = model.sigma.dim;
  const auto nmax = n_grid.back();

  std::vector<Eigen::MatrixXd> w_draws(n_grid.size()), g_draws(n_grid.size());
  for (auto& m : w_draws) m.resize(reps, d);
  for (auto& m : g_draws) m.resize(reps, d);

  // Sign innovations admit an exact sum-law quantile, so W can be coupled to
  // G through the aggregate normal score instead of sign(z) per element;
  // the marginal law of W is unchanged and the W-G discrepancy shrinks with
  // n, which is what the slope fit needs from common random numbers.
  const bool sum_quantile_coupling = model.innovation == Innovation::rademacher ||
                                     model.innovation == Innovation::gaussian;
  std::vector<SignSumQuantile> quantiles;
  if (sum_quantile_coupling && model.innovation == Innovation::rademacher)
    for (auto n : n_grid) quantiles.emplace_back(n);

  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, 0xE1u, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> nd;
    Eigen::VectorXd sum_eps = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sum_z = Eigen::VectorXd::Zero(d);
    std::size_t next = 0;
    for (std::int64_t i = 1; i <= nmax; ++i) {
      for (int c = 0; c < d; ++c) {
        double z = nd(rng);
        sum_z[c] += z;
        if (!sum_quantile_coupling)
          sum_eps[c] += innovation_transform(model.innovation, model.trunc_c, z);
      }
      while (next < n_grid.size() && n_grid[next] == i) {
        double scale = 1.0 / std::sqrt(static_cast<double>(i));
        g_draws[next].row(r) = (model.frame.chol * sum_z * scale).transpose();
        if (!sum_quantile_coupling) {
          w_draws[next].row(r) = (model.frame.chol * sum_eps * scale).transpose();
        } else if (model.innovation == Innovation::gaussian) {
          w_draws[next].row(r) = g_draws[next].row(r);
        } else {
          Eigen::VectorXd s(d);
          for (int c = 0; c < d; ++c)
            s[c] = quantiles[next](normal_cdf(sum_z[c] * scale));
          w_draws[next].row(r) = (model.frame.chol * s * scale).transpose();
        }
        ++next;
      }
    }
  }

  RateStudyResult out;
  out.n_grid = n_grid;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    RhoResult r = rho_estimate(w_draws[k], g_draws[k], family, /*coupled=*/true);
    out.rho_hat.push_back(r.rho_hat);
    out.stderr_at_argmax.push_back(r.stderr_at_argmax);
    bounds::BoundInputs bi;
    bi.n = static_cast<double>(n_grid[k]);
    bi.d = d;
    bi.B = model.b_effective;
    bi.alpha_sq = std::max(model.sigma.alpha_sq, 1e-12);
    bi.beta_sq = model.sigma.beta_sq;
    bi.cov_gap = 0.0;
    out.fklz_overlay.push_back(
        model.sigma.beta_sq > 0 ? bounds::fklz_bound(bi)
                                : std::numeric_limits<double>::infinity());
    out.cckk_overlay.push_back(bounds::prior_bounds(bi, model.sigma.sigma_star_sq).cckk);
  }

  // slope of log rho on log n
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < n_grid.size(); ++k)
    if (out.rho_hat[k] > 0.0) {
      lx.push_back(std::log(static_cast<double>(n_grid[k])));
      ly.push_back(std::log(out.rho_hat[k]));
    }
  double med_rho = 0, med_se = 0;
  {
    auto med = [](std::vector<double> v) {
      if (v.empty()) return 0.0;
      std::sort(v.begin(), v.end());
      return v[v.size() / 2];
    };
    med_rho = med(out.rho_hat);
    med_se = med(out.stderr_at_argmax);
  }
  out.noise_dominated = lx.size() < 2 || med_rho <= 3.0 * med_se;

  auto fit = [](const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size());
    double sx = std::accumulate(x.begin(), x.end(), 0.0);
    double sy = std::accumulate(y.begin(), y.end(), 0.0);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  };
  if (lx.size() >= 2) {
    out.slope = fit(lx, ly);
    Rng rng(derive_seed(seed, 0xC1u));
    std::uniform_int_distribution<std::size_t> pick(0, lx.size() - 1);
    std::vector<double> slopes;
    for (int b = 0; b < 200; ++b) {
      std::vector<double> bx, by;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        std::size_t j = pick(rng);
        bx.push_back(lx[j]);
        by.push_back(ly[j]);
      }
      // resamples with no x-spread carry no slope information
      if (*std::max_element(bx.begin(), bx.end()) -
              *std::min_element(bx.begin(), bx.end()) <
          1e-12)
        continue;
      slopes.push_back(fit(bx, by));
    }
    if (!slopes.empty()) {
      std::sort(slopes.begin(), slopes.end());
      out.slope_ci_lo = slopes[static_cast<std::size_t>(0.025 * (slopes.size() - 1))];
      out.slope_ci_hi = slopes[static_cast<std::size_t>(0.975 * (slopes.size() - 1))];
    }
  }
  return out;
}

}  // namespace steinclt::experiment
