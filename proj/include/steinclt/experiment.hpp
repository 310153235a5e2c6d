#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "steinclt/corr.hpp"
#include "steinclt/mc.hpp"

namespace steinclt::experiment {

/// Innovation laws, all iid, mean 0, variance 1, symmetric. Samples are
/// produced as comonotone transforms of one shared standard-normal stream,
/// so runs with equal seeds are coupled draw-by-draw (common random numbers),
/// and the gaussian law reproduces the driving stream itself.
enum class Innovation { rademacher, uniform_pm, laplace_unit, truncated_normal, gaussian };

Innovation innovation_from_string(const std::string& name);
std::string to_string(Innovation innov);

struct DataModel {
  corr::CorrelationModel sigma;
  corr::UnitFrame frame;  // X_i = L eps_i, so Cov(X_i) = sigma exactly
  Innovation innovation = Innovation::rademacher;
  double trunc_c = 2.0;     // truncation point of the truncated_normal law
  double b_effective = 0;   // sub-exponential scale of one coordinate of X_i
};

DataModel make_data_model(const corr::CorrelationModel& sigma, Innovation innovation,
                          double trunc_c = 2.0);

/// Comonotone transform of a standard normal draw into the innovation law.
double innovation_transform(Innovation innov, double trunc_c, double z);

// Covariance factories used in the studies.
corr::CorrelationModel equicorrelated(int d, double rho);
corr::CorrelationModel two_block(int d1, int d2, double rho_within, double rho_cross);
/// Rank-r loadings plus an eps ridge, renormalized: sigma_star^2 ~ eps while
/// the pair/triple floors stay away from 0.
corr::CorrelationModel lowrank_ridge(int d, int rank, double eps, std::uint64_t seed);

/// reps rows of W = n^{-1/2} sum_i X_i.
Eigen::MatrixXd simulate_W(const DataModel& model, std::int64_t n, int reps,
                           std::uint64_t seed);

/// One dataset of n rows X_i.
Eigen::MatrixXd simulate_X(const DataModel& model, std::int64_t n, std::uint64_t seed);

/// W draws together with exact N(0, sigma) draws built from the same normal
/// stream (per-replicate coupling, nested across n for fixed seed).
struct PairedDraws {
  Eigen::MatrixXd w;  // reps x d
  Eigen::MatrixXd g;  // reps x d, exactly Gaussian
};
PairedDraws simulate_paired(const DataModel& model, std::int64_t n, int reps,
                            std::uint64_t seed);

/// Exact N(0, sigma) draws.
Eigen::MatrixXd gaussian_draws(const corr::UnitFrame& frame, int reps,
                               std::uint64_t seed);

struct TruncationResult {
  Eigen::MatrixXd x_hat;   // per-entry truncation, recentered
  Eigen::VectorXd w_hat;   // n^{-1/2} column sums
  double kappa_n = 0.0;
  double recenter = 0.0;   // exactly 0: every menu law is symmetric
  bool active = false;     // any entry actually truncated
};
TruncationResult truncate_hat(const DataModel& model, const Eigen::MatrixXd& x);

struct BootstrapResult {
  Eigen::MatrixXd draws;    // n_boot x d rows of W^xi
  Eigen::MatrixXd sigma_n;  // centered empirical covariance
  double delta_n_star = 0;  // ||sigma_n - sigma||_inf
};
BootstrapResult multiplier_bootstrap(const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& sigma, int n_boot,
                                     std::uint64_t seed);

/// Finite family of rectangles {x <= b} (optionally {a <= x <= b}).
struct RectangleFamily {
  enum class Kind { grid, list };
  Kind kind = Kind::grid;
  std::vector<double> thresholds;       // grid: shared per-axis thresholds
  std::vector<Eigen::VectorXd> upper;   // list members
  std::vector<Eigen::VectorXd> lower;   // optional, empty = one-sided

  static RectangleFamily default_grid(int per_axis = 13, double lo = -3.0,
                                      double hi = 3.0);
  /// Random one-sided members with per-axis thresholds drawn from the
  /// standard-normal quantile range of the unit-diagonal marginals.
  static RectangleFamily random_family(int d, int count, std::uint64_t seed);
  std::size_t size(int d) const;
};

struct RhoResult {
  double rho_hat = 0.0;
  Eigen::VectorXd argmax_upper;
  double stderr_at_argmax = 0.0;
  std::size_t family_size = 0;
};

/// Max over the family of |P_hat_p - P_hat_q| with every sample classified
/// against all members in one pass. When coupled is true the rows of p and q
/// are treated as paired draws and the difference variance is used.
RhoResult rho_estimate(const Eigen::MatrixXd& samples_p, const Eigen::MatrixXd& samples_q,
                       const RectangleFamily& family, bool coupled);

struct RateStudyResult {
  std::vector<std::int64_t> n_grid;
  std::vector<double> rho_hat, stderr_at_argmax;
  std::vector<double> fklz_overlay, cckk_overlay;
  double slope = 0.0, slope_ci_lo = 0.0, slope_ci_hi = 0.0;
  bool noise_dominated = false;
};

/// rho(W, G) over the n grid against exact Gaussian sampling, coupled and
/// nested across n; least-squares slope of log rho on log n with a bootstrap
/// confidence interval over grid points.
RateStudyResult rate_study(const DataModel& model, std::vector<std::int64_t> n_grid,
                           int reps, const RectangleFamily& family, std::uint64_t seed);

}  // namespace steinclt::experiment
