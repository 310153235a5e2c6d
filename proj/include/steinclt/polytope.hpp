#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "steinclt/corr.hpp"
#include "steinclt/errors.hpp"
#include "steinclt/mc.hpp"

namespace steinclt::polytope {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Face identifier: one, two or three active constraints (sorted indices).
struct FacetIndex {
  int level = 1;
  std::array<int, 3> indices{-1, -1, -1};

  static FacetIndex facet(int j) { return {1, {j, -1, -1}}; }
  static FacetIndex ridge(int j, int k);
  static FacetIndex corner(int j, int k, int l);
};

/// Convex polytope {x : x . v_j <= b_j}. Offsets may be +inf to drop a
/// constraint; normals are unit rows.
struct Polytope {
  Eigen::MatrixXd normals;  // m x d, unit rows
  Eigen::VectorXd offsets;  // m, entries finite or +inf

  int dim() const { return static_cast<int>(normals.cols()); }
  int n_constraints() const { return static_cast<int>(normals.rows()); }
  Eigen::VectorXd normal(int j) const { return normals.row(j).transpose(); }
  bool finite(int j) const { return std::isfinite(offsets[j]); }

  static Polytope from_frame(const corr::UnitFrame& frame, const Eigen::VectorXd& b);
  static Polytope orthant(int d);                    // {x <= 0}
  static Polytope half_space(int d, int axis, double b);
};

Polytope inflate(const Polytope& a, double t);

bool contains(const Polytope& a, const Eigen::VectorXd& x);

/// x in A(kappa) \ A(-kappa).
bool band_contains(const Polytope& a, double kappa, const Eigen::VectorXd& x);

/// Unit vector in span{v_j, v_k} orthogonal to v_j with positive dot on v_k.
Eigen::VectorXd derived_normal_pair(const Eigen::VectorXd& v_j,
                                    const Eigen::VectorXd& v_k);

/// Unit vector in span{v_j, v_k, v_l} orthogonal to v_j and v_k with positive
/// dot on v_l.
Eigen::VectorXd derived_normal_triple(const Eigen::VectorXd& v_j,
                                      const Eigen::VectorXd& v_k,
                                      const Eigen::VectorXd& v_l);

/// Precomputed v_{jk} and v_{jkl} tables for a set of normals. Pairs with
/// v_k = -v_j and triples with a rank-deficient span are left undefined.
class DerivedNormals {
 public:
  explicit DerivedNormals(const Eigen::MatrixXd& normals);

  bool pair_defined(int j, int k) const { return pair_ok_[id2(j, k)]; }
  const Eigen::VectorXd& pair(int j, int k) const;  // v_{jk}
  bool triple_defined(int j, int k, int l) const { return triple_ok_[id3(j, k, l)]; }
  const Eigen::VectorXd& triple(int j, int k, int l) const;  // v_{jkl} = v_{kjl}

  int dim() const { return d_; }

 private:
  std::size_t id2(int j, int k) const { return static_cast<std::size_t>(j) * m_ + k; }
  std::size_t id3(int j, int k, int l) const;
  int m_ = 0;  // number of normals
  int d_ = 0;
  std::vector<Eigen::VectorXd> pair_vec_;
  std::vector<char> pair_ok_;
  std::vector<Eigen::VectorXd> triple_vec_;
  std::vector<char> triple_ok_;
};

/// True when every 2/3/4-subset of normals that is rank-deficient has
/// inconsistent offsets (so the corresponding face equations are insoluble).
bool is_regular(const Polytope& a);

/// Perturb offsets upward by uniform draws in (0, eps) wherever a
/// rank-deficient subset has consistent offsets. At most 100 retries.
Polytope regularize(const Polytope& a, Rng& rng, double eps);

/// x lies on exactly the constraints in f (within tol) and strictly inside
/// the rest.
bool facet_relint_test(const Polytope& a, const FacetIndex& f,
                       const Eigen::VectorXd& x, double tol = 1e-9);

/// Membership in the outer cone swept from relint of the face along the
/// face's own normals: x = y + sum s_m v_m with all s_m > 0 and y in relint.
bool outer_cone_membership(const Polytope& a, const FacetIndex& f,
                           const Eigen::VectorXd& x);

/// Precomputed sweep test for one cone (inverse of the small direction
/// system cached); use for bulk membership queries.
class ConeTester {
 public:
  ConeTester(const Polytope& a, const FacetIndex& f,
             const std::vector<Eigen::VectorXd>& directions);
  static ConeTester outer(const Polytope& a, const FacetIndex& f);
  bool operator()(const Eigen::VectorXd& x) const;

 private:
  Polytope a_;
  FacetIndex f_;
  Eigen::MatrixXd dirs_, vrows_;
  Eigen::VectorXd bf_;
  Eigen::MatrixXd ginv_;
};

/// Same sweep test with caller-supplied directions (need not be unit).
bool wedge_cone_membership(const Polytope& a, const FacetIndex& f,
                           const std::vector<Eigen::VectorXd>& directions,
                           const Eigen::VectorXd& x);

/// Min-norm point of the affine hull {x : v_m . x = b_m, m in f}; it lies in
/// span of the face normals. Throws SingularGram / InfiniteOffset.
Eigen::VectorXd affine_hull_point(const Polytope& a, const FacetIndex& f);

/// Wedge directions u +- u_perp for a pair face, following the projection
/// construction (u points along the hull's min-norm point, v_j if that is 0).
std::vector<Eigen::VectorXd> wedge_directions_pair(const Polytope& a, int j, int k);

/// Three pairwise-orthogonal wedge directions for a triple face.
std::vector<Eigen::VectorXd> wedge_directions_triple(const Polytope& a, int j, int k,
                                                     int l);

/// Parses the polytope literal: first line d, then one line per constraint
/// "v_1 ... v_d b" with "inf" allowed for b.
Polytope parse_polytope(const std::string& text);
std::string format_polytope(const Polytope& a);

}  // namespace steinclt::polytope
