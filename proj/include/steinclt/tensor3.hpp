#pragma once

#include <Eigen/Dense>
#include <vector>

namespace steinclt {

/// Dense order-3 tensor, row-major (i fastest-varying last).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int a, int b, int c) { return data_[idx(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[idx(a, b, c)]; }

  /// <T, u (x) v (x) w>
  double contract(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                  const Eigen::VectorXd& w) const {
    double s = 0.0;
    for (int a = 0; a < d_; ++a) {
      if (u[a] == 0.0) continue;
      double sa = 0.0;
      for (int b = 0; b < d_; ++b) {
        if (v[b] == 0.0) continue;
        double sb = 0.0;
        const double* row = &data_[idx(a, b, 0)];
        for (int c = 0; c < d_; ++c) sb += row[c] * w[c];
        sa += v[b] * sb;
      }
      s += u[a] * sa;
    }
    return s;
  }

  static Tensor3 outer(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& w) {
    Tensor3 t(static_cast<int>(u.size()));
    for (int a = 0; a < t.d_; ++a)
      for (int b = 0; b < t.d_; ++b)
        for (int c = 0; c < t.d_; ++c) t(a, b, c) = u[a] * v[b] * w[c];
    return t;
  }

 private:
  std::size_t idx(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * d_ + b) * d_ + c;
  }
  int d_ = 0;
  std::vector<double> data_;
};

}  // namespace steinclt
