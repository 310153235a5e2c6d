#include "steinclt/corr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace steinclt::corr {

namespace {

constexpr double kSymTol = 1e-12;
constexpr double kPsdTol = -1e-8;
constexpr double kPairFloor = 1e-14;

double det2(const Eigen::MatrixXd& s, int j, int k) {
  return s(j, j) * s(k, k) - s(j, k) * s(k, j);
}

double det3(const Eigen::MatrixXd& s, int j, int k, int l) {
  Eigen::Matrix3d m;
  const int idx[3] = {j, k, l};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m(a, b) = s(idx[a], idx[b]);
  return m.determinant();
}

TripleRatio triple_ratio_impl(const Eigen::MatrixXd& s, int j, int k, int l) {
  TripleRatio r;
  double d2 = det2(s, j, k);
  if (d2 <= kPairFloor) {
    r.value = 0.0;
    r.degenerate_pair = true;
    return r;
  }
  r.value = det3(s, j, k, l) / d2;
  return r;
}

void fill_diagnostics(CorrelationModel& m) {
  const int d = m.dim;
  m.alpha_sq = 1.0;
  m.degenerate_pair = false;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      double det = det2(m.sigma, j, k);
      m.alpha_sq = std::min(m.alpha_sq, det);
      if (det <= kPairFloor) m.degenerate_pair = true;
    }
  m.alpha_sq = std::max(m.alpha_sq, 0.0);

  // beta_sq minimizes over all triples and all 3 pair choices per triple.
  m.beta_sq = 1.0;
  if (d >= 3) {
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        for (int c = b + 1; c < d; ++c) {
          const int tri[3][3] = {{a, b, c}, {a, c, b}, {b, c, a}};
          for (const auto& t : tri)
            m.beta_sq = std::min(m.beta_sq,
                                 triple_ratio_impl(m.sigma, t[0], t[1], t[2]).value);
        }
  }
  m.beta_sq = std::max(m.beta_sq, 0.0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.sigma, Eigen::EigenvaluesOnly);
  m.sigma_star_sq = std::max(es.eigenvalues().minCoeff(), 0.0);
}

}  // namespace

CorrelationModel validate_and_normalize(const Eigen::MatrixXd& matrix) {
  const int d = static_cast<int>(matrix.rows());
  if (matrix.cols() != d) throw ShapeMismatch("correlation matrix must be square");
  double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
    throw NonSymmetric("matrix deviates from symmetry beyond 1e-12");
  for (int j = 0; j < d; ++j)
    if (!(matrix(j, j) > 0.0))
      throw ZeroDiagonal("diagonal entry " + std::to_string(j) + " not positive");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kPsdTol * scale)
    throw NonPsd("smallest eigenvalue below -1e-8");

  CorrelationModel m;
  m.dim = d;
  Eigen::VectorXd inv_sd = matrix.diagonal().array().sqrt().inverse();
  m.sigma = inv_sd.asDiagonal() * matrix * inv_sd.asDiagonal();
  m.sigma = 0.5 * (m.sigma + m.sigma.transpose().eval());
  m.sigma.diagonal().setOnes();
  fill_diagnostics(m);
  return m;
}

TripleRatio triple_ratio(const CorrelationModel& model, int j, int k, int l) {
  const int d = model.dim;
  if (j == k || j == l || k == l || j < 0 || k < 0 || l < 0 || j >= d || k >= d || l >= d)
    throw ShapeMismatch("triple_ratio: indices must be distinct and in range");
  return triple_ratio_impl(model.sigma, j, k, l);
}

UnitFrame unit_frame(const CorrelationModel& model) {
  if (model.sigma_star_sq <= 1e-10)
    throw SingularMatrix("sigma not full rank; call perturb_to_full_rank first");
  Eigen::LLT<Eigen::MatrixXd> llt(model.sigma);
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("Cholesky factorization failed");
  UnitFrame f;
  f.dim = model.dim;
  f.chol = llt.matrixL();
  f.normals = f.chol;  // row j of L is v_j; |v_j|^2 = sigma_jj = 1
  return f;
}

CorrelationModel perturb_to_full_rank(const CorrelationModel& model, double eps) {
  if (eps <= 0.0) eps = 1e-12;
  if (eps > 1e-3) throw ShapeMismatch("perturb_to_full_rank: eps must be in (0, 1e-3]");
  double e2 = eps * eps;
  CorrelationModel out;
  out.dim = model.dim;
  out.sigma =
      (model.sigma + e2 * Eigen::MatrixXd::Identity(model.dim, model.dim)) / (1.0 + e2);
  out.sigma.diagonal().setOnes();
  fill_diagnostics(out);
  return out;
}

MinAngles min_angles(const UnitFrame& frame) {
  const int d = frame.dim;
  if (d < 3) throw DimensionTooSmall("min_angles requires d >= 3");
  MinAngles ma;
  ma.alpha_angle = M_PI / 2.0;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      double c = std::abs(frame.normals.row(j).dot(frame.normals.row(k)));
      ma.alpha_angle = std::min(ma.alpha_angle, std::acos(std::min(c, 1.0)));
    }

  // Angle between v_l and span{v_j, v_k}: norm of the component of v_l
  // orthogonal to the span. Three pair choices per unordered triple.
  ma.beta_angle = M_PI / 2.0;
  auto span_angle = [&](int j, int k, int l) {
    Eigen::VectorXd a = frame.normal(j);
    Eigen::VectorXd b = frame.normal(k) - frame.normal(k).dot(a) * a;
    double bn = b.norm();
    if (bn < 1e-14) return;  // pair collinear, span is a line
    b /= bn;
    Eigen::VectorXd v = frame.normal(l);
    Eigen::VectorXd res = v - v.dot(a) * a - v.dot(b) * b;
    ma.beta_angle = std::min(ma.beta_angle, std::asin(std::min(res.norm(), 1.0)));
  };
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      for (int c = b + 1; c < d; ++c) {
        span_angle(a, b, c);
        span_angle(a, c, b);
        span_angle(b, c, a);
      }
  return ma;
}

double cov_gap(const Eigen::MatrixXd& cov_w, const Eigen::MatrixXd& sigma) {
  if (cov_w.rows() != sigma.rows() || cov_w.cols() != sigma.cols())
    throw ShapeMismatch("cov_gap: dimensions differ");
  return (cov_w - sigma).cwiseAbs().maxCoeff();
}

}  // namespace steinclt::corr
