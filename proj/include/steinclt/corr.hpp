#pragma once

#include <Eigen/Dense>

#include "steinclt/errors.hpp"

namespace steinclt::corr {

/// A d x d correlation matrix (unit diagonal) together with its degeneracy
/// diagnostics: alpha_sq is the smallest 2x2 principal minor determinant,
/// beta_sq the smallest 3x3-over-2x2 determinant ratio over all triples and
/// pair choices, sigma_star_sq the smallest eigenvalue.
struct CorrelationModel {
  int dim = 0;
  Eigen::MatrixXd sigma;
  double alpha_sq = 0.0;
  double beta_sq = 0.0;
  double sigma_star_sq = 0.0;
  bool degenerate_pair = false;  // some pair has a vanishing 2x2 minor
};

/// The d unit row-normals of the Cholesky factorization sigma = L L^T.
/// Gram matrix of the normals reproduces sigma.
struct UnitFrame {
  int dim = 0;
  Eigen::MatrixXd normals;  // d x d, row j is v_j
  Eigen::MatrixXd chol;     // lower-triangular L

  Eigen::VectorXd normal(int j) const { return normals.row(j).transpose(); }
};

struct TripleRatio {
  double value = 0.0;
  bool degenerate_pair = false;  // denominator minor below 1e-14, value forced to 0
};

struct MinAngles {
  double alpha_angle = 0.0;  // min over pairs of the acute angle between v_j, v_k
  double beta_angle = 0.0;   // min over triples of the angle between v_l and span{v_j,v_k}
};

CorrelationModel validate_and_normalize(const Eigen::MatrixXd& matrix);

TripleRatio triple_ratio(const CorrelationModel& model, int j, int k, int l);

UnitFrame unit_frame(const CorrelationModel& model);

CorrelationModel perturb_to_full_rank(const CorrelationModel& model, double eps);

MinAngles min_angles(const UnitFrame& frame);

double cov_gap(const Eigen::MatrixXd& cov_w, const Eigen::MatrixXd& sigma);

}  // namespace steinclt::corr
