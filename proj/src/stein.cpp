#include "steinclt/stein.hpp"

#include <algorithm>
#include <cmath>

#include "steinclt/errors.hpp"
#include "steinclt/normal.hpp"

namespace steinclt::stein {

namespace {

double sigma_of(double s) { return std::sqrt(-std::expm1(-2.0 * s)); }

Polytope scale_polytope(const Polytope& a, double inv_scale) {
  Polytope out = a;
  for (int j = 0; j < out.n_constraints(); ++j)
    if (out.finite(j)) out.offsets[j] *= inv_scale;
  return out;
}

struct QuadNode {
  double q, weight, s, sigma;
};

std::vector<QuadNode> build_nodes(double t, const QuadSpec& quad) {
  if (quad.nodes < 1 || quad.nodes > 4096)
    throw QuadratureBudgetExceeded("nodes must be in [1, 4096]");
  std::vector<double> q, w;
  gauss_legendre_01(quad.nodes, q, w);
  std::vector<QuadNode> out;
  out.reserve(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    double s = t - std::log(q[i]);
    if (s > quad.s_cap) continue;  // integrand ~ e^{-s}, dropped past the cap
    out.push_back({q[i], w[i], s, sigma_of(s)});
  }
  return out;
}

}  // namespace

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  // Newton iteration on P_n with the Chebyshev initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // map from (-1,1) to (0,1)
    nodes[i] = 0.5 * (1.0 - x);
    nodes[n - 1 - i] = 0.5 * (1.0 + x);
    double wgt = 1.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = wgt;
    weights[n - 1 - i] = wgt;
  }
}

McEstimate ou_smooth(const Polytope& a, double t, const Eigen::VectorXd& x,
                     std::int64_t n, std::uint64_t seed) {
  if (!(t > 0.0)) throw ShapeMismatch("ou_smooth: t must be > 0");
  const int d = a.dim();
  const double et = std::exp(-t);
  const double st = sigma_of(t);
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd z(d);
  MeanVar acc;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) z[c] = nd(rng);
    double smooth = polytope::contains(a, (et * x + st * z).eval()) ? 1.0 : 0.0;
    double base = polytope::contains(a, z) ? 1.0 : 0.0;
    acc.add(smooth - base);  // common random numbers across both expectations
  }
  McEstimate e;
  e.value = acc.mean();
  e.stderr_ = acc.stderr_of_mean();
  e.n_samples = n;
  e.seed = seed;
  return e;
}

McEstimate psi_contracted(const Polytope& a, const DerivedNormals& dn, double t,
                          const Eigen::VectorXd& x, const DerivativeCoefficient& coeff,
                          const QuadSpec& quad, std::int64_t n, std::uint64_t seed) {
  if (!(t > 0.0)) throw ShapeMismatch("psi derivatives need t > 0");
  const int r = coeff.order;
  auto nodes = build_nodes(t, quad);

  // d^r h_s contracted = (-1)^r sigma^{-r} * integral over A/sigma of
  // <coeff, d^r phi(z - y/sigma)> dz, with y = e^{-s} x.
  auto results = parallel_map(nodes.size(), [&](std::size_t i) {
    const QuadNode& nd = nodes[i];
    Polytope scaled = scale_polytope(a, 1.0 / nd.sigma);
    Eigen::VectorXd shift = (std::exp(-nd.s) / nd.sigma) * x;
    std::uint64_t s = derive_seed(seed, 0x70000000ULL + r, i);
    switch (r) {
      case 1:
        return gaussint::grad_integral(scaled, coeff.u, shift, n, s);
      case 2:
        return gaussint::hessian_integral(scaled, dn, coeff.m, n, s, &shift);
      case 3:
        return gaussint::third_integral(scaled, dn, coeff.t, n, s, &shift);
      default:
        throw ShapeMismatch("psi_contracted: order must be 1..3");
    }
  });

  // psi-derivative = -int_t^inf e^{-rs} [d^r h_s](e^{-s} x) ds, pulled back to
  // q in (0,1] with ds = dq/q.
  std::vector<double> coefs(nodes.size());
  double sign = (r % 2 == 0) ? 1.0 : -1.0;  // (-1)^r
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const QuadNode& nd = nodes[i];
    coefs[i] = -nd.weight / nd.q * std::exp(-r * nd.s) * sign *
               std::pow(nd.sigma, -static_cast<double>(r));
  }
  McEstimate out = combine_linear(coefs, results);
  out.seed = seed;
  return out;
}

McEstimate psi_derivative(const Polytope& a, const DerivedNormals& dn, double t,
                          const Eigen::VectorXd& x, const std::vector<int>& multi_index,
                          const QuadSpec& quad, std::int64_t n, std::uint64_t seed) {
  const int d = a.dim();
  const int r = static_cast<int>(multi_index.size());
  if (!(t > 0.0)) throw ShapeMismatch("psi derivatives need t > 0");
  if (r == 0) {
    // psi_t(x) = -int_t^inf [h_s(e^{-s}x) - E h(Z)] ds; the bracket is the
    // semigroup value at time s, estimated with shared draws per node.
    auto nodes = build_nodes(t, quad);
    auto results = parallel_map(nodes.size(), [&](std::size_t i) {
      return ou_smooth(a, nodes[i].s, x, n, derive_seed(seed, 0x70000000ULL, i));
    });
    std::vector<double> coefs(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
      coefs[i] = -nodes[i].weight / nodes[i].q;
    McEstimate out = combine_linear(coefs, results);
    out.seed = seed;
    return out;
  }
  if (r > 3) throw ShapeMismatch("psi_derivative supports orders up to 3");
  for (int idx : multi_index)
    if (idx < 0 || idx >= d) throw ShapeMismatch("multi_index out of range");
  DerivativeCoefficient coeff;
  coeff.order = r;
  if (r == 1) {
    coeff.u = Eigen::VectorXd::Zero(d);
    coeff.u[multi_index[0]] = 1.0;
  } else if (r == 2) {
    coeff.m = Eigen::MatrixXd::Zero(d, d);
    coeff.m(multi_index[0], multi_index[1]) = 1.0;
  } else {
    coeff.t = Tensor3(d);
    coeff.t(multi_index[0], multi_index[1], multi_index[2]) = 1.0;
  }
  return psi_contracted(a, dn, t, x, coeff, quad, n, seed);
}

McEstimate stein_residual(const Polytope& a, double t, const Eigen::VectorXd& w,
                          const QuadSpec& quad, std::int64_t n, std::uint64_t seed) {
  if (!(t > 0.0)) throw ShapeMismatch("stein_residual: t must be > 0");
  if (a.dim() > 4) throw ShapeMismatch("stein_residual is a desk-scale check, d <= 4");
  auto nodes = build_nodes(t, quad);

  // With M = I_d every ridge coefficient v_j . v_jk vanishes, so both
  // derivative terms reduce to the same per-node facet integrals; sharing the
  // draws makes the cancellation explicit in the variance.
  struct NodeJob {
    std::size_t node;
    int j;
  };
  std::vector<NodeJob> jobs;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int j = 0; j < a.n_constraints(); ++j)
      if (a.finite(j)) jobs.push_back({i, j});

  auto results = parallel_map(jobs.size(), [&](std::size_t idx) {
    const NodeJob& job = jobs[idx];
    const QuadNode& nd = nodes[job.node];
    Polytope scaled = scale_polytope(a, 1.0 / nd.sigma);
    Eigen::VectorXd shift = (std::exp(-nd.s) / nd.sigma) * w;
    return gaussint::facet_surface_integral(
        scaled, job.j, shift, n, derive_seed(seed, 0x90000000ULL + job.node, job.j));
  });

  std::vector<double> coefs(jobs.size());
  for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
    const NodeJob& job = jobs[idx];
    const QuadNode& nd = nodes[job.node];
    const Eigen::VectorXd vj = a.normal(job.j);
    double c = a.offsets[job.j] / nd.sigma - vj.dot(w) * std::exp(-nd.s) / nd.sigma;
    double quad_factor = nd.weight / nd.q;
    // <I, hess psi>: -e^{-2s} sigma^{-2} * (-c) * J_j
    double hess_coef = -quad_factor * std::exp(-2.0 * nd.s) / (nd.sigma * nd.sigma) * (-c);
    // w . grad psi: -e^{-s} * (-sigma^{-1}) * (w.v_j) * J_j
    double grad_coef = -quad_factor * std::exp(-nd.s) * (-1.0 / nd.sigma) * vj.dot(w);
    coefs[idx] = hess_coef - grad_coef;  // residual combines the two terms
  }
  McEstimate deriv = combine_linear(coefs, results);
  McEstimate tt = ou_smooth(a, t, w, n, derive_seed(seed, 0x91000000ULL));
  McEstimate out;
  out.value = deriv.value - tt.value;
  out.stderr_ = std::sqrt(deriv.stderr_ * deriv.stderr_ + tt.stderr_ * tt.stderr_);
  out.n_samples = deriv.n_samples + tt.n_samples;
  out.seed = seed;
  return out;
}

double kernel_delta(const std::vector<Eigen::MatrixXd>& samples,
                    const Eigen::MatrixXd& normals, const DerivedNormals& dn) {
  if (samples.empty()) throw ShapeMismatch("kernel_delta: no samples");
  const int m = static_cast<int>(normals.rows());
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      if (j != k && dn.pair_defined(j, k)) pairs.emplace_back(j, k);
  if (pairs.empty()) throw EmptyPairSet("no admissible (j,k) with v_k != -v_j");
  double mean = 0.0;
  for (const auto& mat : samples) {
    double best = 0.0;
    for (auto [j, k] : pairs) {
      Eigen::VectorXd vj = normals.row(j).transpose();
      const Eigen::VectorXd& vjk = dn.pair(j, k);
      double s = std::abs(vj.dot(mat * vj)) + std::abs(vj.dot(mat * vjk)) +
                 std::abs(vjk.dot(mat * vjk));
      best = std::max(best, s);
    }
    mean += best;
  }
  return mean / static_cast<double>(samples.size());
}

Eigen::MatrixXd gauss_kernel_matrix(const Eigen::MatrixXd& sigma1,
                                    const corr::UnitFrame& frame) {
  const int d = frame.dim;
  if (sigma1.rows() != d || sigma1.cols() != d)
    throw ShapeMismatch("sigma1 dimension mismatch");
  // V = L^{-1}; M = V sigma1 V' - I via two triangular solves
  Eigen::MatrixXd x = frame.chol.triangularView<Eigen::Lower>().solve(sigma1);
  Eigen::MatrixXd y =
      frame.chol.triangularView<Eigen::Lower>().solve(x.transpose().eval());
  return y.transpose() - Eigen::MatrixXd::Identity(d, d);
}

GaussDeltaTerms gauss_delta_terms(const Eigen::MatrixXd& sigma1,
                                  const corr::CorrelationModel& model,
                                  const corr::UnitFrame& frame) {
  const int d = model.dim;
  if (sigma1.rows() != d || sigma1.cols() != d)
    throw ShapeMismatch("sigma1 dimension mismatch");
  if (model.sigma_star_sq <= 1e-12) throw SingularMatrix("sigma must be full rank");

  Eigen::MatrixXd m = gauss_kernel_matrix(sigma1, frame);
  Eigen::MatrixXd delta = sigma1 - model.sigma;
  polytope::DerivedNormals dn(frame.normals);

  GaussDeltaTerms out;
  out.diag_bilinear.resize(d);
  out.diag_closed.resize(d);
  out.cross_bilinear = Eigen::MatrixXd::Zero(d, d);
  out.cross_closed = Eigen::MatrixXd::Zero(d, d);
  out.pair_bilinear = Eigen::MatrixXd::Zero(d, d);
  out.pair_closed = Eigen::MatrixXd::Zero(d, d);

  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd vj = frame.normal(j);
    out.diag_bilinear[j] = vj.dot(m * vj);
    out.diag_closed[j] = delta(j, j);
  }
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      if (j == k || !dn.pair_defined(j, k)) continue;
      Eigen::VectorXd vj = frame.normal(j);
      const Eigen::VectorXd& vjk = dn.pair(j, k);
      double s2 = 1.0 - model.sigma(j, k) * model.sigma(j, k);
      out.cross_bilinear(j, k) = vj.dot(m * vjk);
      out.cross_closed(j, k) =
          (delta(j, k) - delta(j, j) * model.sigma(j, k)) / std::sqrt(s2);
      out.pair_bilinear(j, k) = vjk.dot(m * vjk);
      out.pair_closed(j, k) = (delta(k, k) +
                               model.sigma(j, k) * model.sigma(j, k) * delta(j, j) -
                               2.0 * model.sigma(j, k) * delta(j, k)) /
                              s2;
    }
  out.max_discrepancy = std::max(
      {(out.diag_bilinear - out.diag_closed).cwiseAbs().maxCoeff(),
       (out.cross_bilinear - out.cross_closed).cwiseAbs().maxCoeff(),
       (out.pair_bilinear - out.pair_closed).cwiseAbs().maxCoeff()});
  return out;
}

}  // namespace steinclt::stein
