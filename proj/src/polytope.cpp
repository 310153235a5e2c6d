#include "steinclt/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace steinclt::polytope {

namespace {

constexpr double kCollinearTol = 1e-12;  // |v_j . v_k| > 1 - tol means collinear
constexpr double kSpanTol = 1e-10;       // smallest singular value floor for spans
constexpr double kRankTol = 1e-10;

int rank_of(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  double thresh = kRankTol * std::max(1.0, svd.singularValues()(0));
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thresh) ++r;
  return r;
}

}  // namespace

FacetIndex FacetIndex::ridge(int j, int k) {
  if (j > k) std::swap(j, k);
  return {2, {j, k, -1}};
}

FacetIndex FacetIndex::corner(int j, int k, int l) {
  std::array<int, 3> v{j, k, l};
  std::sort(v.begin(), v.end());
  return {3, v};
}

Polytope Polytope::from_frame(const corr::UnitFrame& frame, const Eigen::VectorXd& b) {
  if (b.size() != frame.dim) throw ShapeMismatch("offsets size != frame dim");
  return {frame.normals, b};
}

Polytope Polytope::orthant(int d) {
  return {Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)};
}

Polytope Polytope::half_space(int d, int axis, double b) {
  Polytope a = orthant(d);
  a.offsets.setConstant(kInf);
  a.offsets[axis] = b;
  return a;
}

Polytope inflate(const Polytope& a, double t) {
  Polytope out = a;
  for (int j = 0; j < out.n_constraints(); ++j)
    if (out.finite(j)) out.offsets[j] += t;
  return out;
}

bool contains(const Polytope& a, const Eigen::VectorXd& x) {
  for (int j = 0; j < a.n_constraints(); ++j) {
    if (!a.finite(j)) continue;
    if (a.normals.row(j).dot(x) > a.offsets[j]) return false;
  }
  return true;
}

bool band_contains(const Polytope& a, double kappa, const Eigen::VectorXd& x) {
  if (!(kappa > 0.0)) throw ShapeMismatch("band_contains: kappa must be > 0");
  return contains(inflate(a, kappa), x) && !contains(inflate(a, -kappa), x);
}

Eigen::VectorXd derived_normal_pair(const Eigen::VectorXd& v_j,
                                    const Eigen::VectorXd& v_k) {
  double c = v_j.dot(v_k);
  if (std::abs(c) > 1.0 - kCollinearTol)
    throw CollinearNormals("pair normals collinear (includes v_k = -v_j)");
  Eigen::VectorXd w = v_k - c * v_j;
  return w / w.norm();
}

Eigen::VectorXd derived_normal_triple(const Eigen::VectorXd& v_j,
                                      const Eigen::VectorXd& v_k,
                                      const Eigen::VectorXd& v_l) {
  Eigen::MatrixXd span(v_j.size(), 3);
  span.col(0) = v_j;
  span.col(1) = v_k;
  span.col(2) = v_l;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(span);
  if (svd.singularValues()(2) <= kSpanTol)
    throw DegenerateTriple("triple span is not three-dimensional");
  Eigen::VectorXd a = v_j;
  Eigen::VectorXd b = v_k - v_k.dot(a) * a;
  b /= b.norm();
  Eigen::VectorXd w = v_l - v_l.dot(a) * a - v_l.dot(b) * b;
  w /= w.norm();
  if (w.dot(v_l) < 0.0) w = -w;
  return w;
}

DerivedNormals::DerivedNormals(const Eigen::MatrixXd& normals)
    : m_(static_cast<int>(normals.rows())), d_(static_cast<int>(normals.cols())) {
  pair_vec_.resize(static_cast<std::size_t>(m_) * m_);
  pair_ok_.assign(pair_vec_.size(), 0);
  for (int j = 0; j < m_; ++j)
    for (int k = 0; k < m_; ++k) {
      if (j == k) continue;
      double c = normals.row(j).dot(normals.row(k));
      if (std::abs(c) > 1.0 - kCollinearTol) continue;
      pair_vec_[id2(j, k)] =
          derived_normal_pair(normals.row(j).transpose(), normals.row(k).transpose());
      pair_ok_[id2(j, k)] = 1;
    }
  triple_vec_.resize(static_cast<std::size_t>(m_) * m_ * m_);
  triple_ok_.assign(triple_vec_.size(), 0);
  for (int j = 0; j < m_; ++j)
    for (int k = j + 1; k < m_; ++k)
      for (int l = 0; l < m_; ++l) {
        if (l == j || l == k) continue;
        try {
          Eigen::VectorXd v =
              derived_normal_triple(normals.row(j).transpose(),
                                    normals.row(k).transpose(),
                                    normals.row(l).transpose());
          triple_vec_[id3(j, k, l)] = v;
          triple_ok_[id3(j, k, l)] = 1;
        } catch (const DegenerateTriple&) {
          // left undefined; callers skip or throw MissingTripleNormal
        }
      }
}

std::size_t DerivedNormals::id3(int j, int k, int l) const {
  if (j > k) std::swap(j, k);  // v_{jkl} = v_{kjl}
  return (static_cast<std::size_t>(j) * m_ + k) * m_ + l;
}

const Eigen::VectorXd& DerivedNormals::pair(int j, int k) const {
  if (!pair_ok_[id2(j, k)]) throw CollinearNormals("pair normal undefined");
  return pair_vec_[id2(j, k)];
}

const Eigen::VectorXd& DerivedNormals::triple(int j, int k, int l) const {
  if (!triple_ok_[id3(j, k, l)]) throw MissingTripleNormal("triple normal undefined");
  return triple_vec_[id3(j, k, l)];
}

namespace {

// Checks one subset: returns true when the subset is fine (full rank, or
// rank-deficient with inconsistent offsets).
bool subset_ok(const Polytope& a, const std::vector<int>& idx) {
  const int d = a.dim();
  const int m = static_cast<int>(idx.size());
  Eigen::MatrixXd v(d, m);
  Eigen::MatrixXd vb(d + 1, m);
  for (int i = 0; i < m; ++i) {
    v.col(i) = a.normal(idx[i]);
    vb.col(i).head(d) = v.col(i);
    vb(d, i) = a.offsets[idx[i]];
  }
  int rv = rank_of(v);
  if (rv >= m) return true;
  return rank_of(vb) > rv;
}

template <typename F>
void for_each_subset(int n, int size, F&& f) {
  std::vector<int> idx(size);
  std::function<bool(int, int)> rec = [&](int start, int depth) -> bool {
    if (depth == size) return f(idx);
    for (int i = start; i < n; ++i) {
      idx[depth] = i;
      if (!rec(i + 1, depth + 1)) return false;
    }
    return true;
  };
  rec(0, 0);
}

}  // namespace

bool is_regular(const Polytope& a) {
  const int m = a.n_constraints();
  std::vector<int> finite;
  for (int j = 0; j < m; ++j)
    if (a.finite(j)) finite.push_back(j);
  const int n = static_cast<int>(finite.size());
  bool ok = true;
  for (int size = 2; size <= 4 && ok; ++size) {
    if (n < size) break;
    for_each_subset(n, size, [&](const std::vector<int>& pick) {
      std::vector<int> idx(pick.size());
      for (std::size_t i = 0; i < pick.size(); ++i) idx[i] = finite[pick[i]];
      if (!subset_ok(a, idx)) {
        ok = false;
        return false;
      }
      return true;
    });
  }
  return ok;
}

Polytope regularize(const Polytope& a, Rng& rng, double eps) {
  if (!(eps > 0.0 && eps <= 1e-6))
    throw ShapeMismatch("regularize: eps must be in (0, 1e-6]");
  if (is_regular(a)) return a;
  std::uniform_real_distribution<double> u(0.0, eps);
  Polytope cur = a;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Polytope next = cur;
    // one-sided positive perturbation so A only grows
    for (int j = 0; j < next.n_constraints(); ++j)
      if (next.finite(j)) next.offsets[j] = a.offsets[j] + std::nextafter(u(rng), eps);
    if (is_regular(next)) return next;
  }
  throw RegularizationFailed("retry budget of 100 exhausted");
}

bool facet_relint_test(const Polytope& a, const FacetIndex& f, const Eigen::VectorXd& x,
                       double tol) {
  for (int j = 0; j < a.n_constraints(); ++j) {
    bool active = false;
    for (int i = 0; i < f.level; ++i) active |= (f.indices[i] == j);
    if (!a.finite(j)) {
      if (active) throw InfiniteOffset("face references a vacuous constraint");
      continue;
    }
    double g = a.normals.row(j).dot(x) - a.offsets[j];
    if (active) {
      if (std::abs(g) > tol) return false;
    } else {
      if (g >= -tol) return false;
    }
  }
  return true;
}

ConeTester::ConeTester(const Polytope& a, const FacetIndex& f,
                       const std::vector<Eigen::VectorXd>& directions)
    : a_(a), f_(f) {
  const int m = f.level;
  if (static_cast<int>(directions.size()) != m)
    throw BadDirections("need exactly level-many directions");
  dirs_.resize(a.dim(), m);
  vrows_.resize(m, a.dim());
  bf_.resize(m);
  for (int i = 0; i < m; ++i) {
    int j = f.indices[i];
    if (!a.finite(j)) throw InfiniteOffset("cone over a vacuous constraint");
    dirs_.col(i) = directions[i];
    vrows_.row(i) = a.normals.row(j);
    bf_[i] = a.offsets[j];
  }
  Eigen::MatrixXd g = vrows_ * dirs_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  if (!lu.isInvertible()) throw SingularGram("sweep system singular");
  ginv_ = lu.inverse();
}

ConeTester ConeTester::outer(const Polytope& a, const FacetIndex& f) {
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(f.level);
  for (int i = 0; i < f.level; ++i) dirs.push_back(a.normal(f.indices[i]));
  return ConeTester(a, f, dirs);
}

bool ConeTester::operator()(const Eigen::VectorXd& x) const {
  Eigen::VectorXd s = ginv_ * (vrows_ * x - bf_);
  for (int i = 0; i < s.size(); ++i)
    if (!(s[i] > 0.0)) return false;
  Eigen::VectorXd y = x - dirs_ * s;
  return facet_relint_test(a_, f_, y);
}

bool outer_cone_membership(const Polytope& a, const FacetIndex& f,
                           const Eigen::VectorXd& x) {
  return ConeTester::outer(a, f)(x);
}

bool wedge_cone_membership(const Polytope& a, const FacetIndex& f,
                           const std::vector<Eigen::VectorXd>& directions,
                           const Eigen::VectorXd& x) {
  if (static_cast<int>(directions.size()) != f.level)
    throw BadDirections("need exactly level-many directions");
  // directions must lie in the span of the involved normals and be pairwise
  // orthogonal (the wedge construction yields orthogonal legs)
  const int m = f.level;
  Eigen::MatrixXd span(a.dim(), m);
  for (int i = 0; i < m; ++i) span.col(i) = a.normal(f.indices[i]);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.dim(), m);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd& u = directions[i];
    Eigen::VectorXd res = u - q * (q.transpose() * u);
    if (res.norm() > 1e-8 * std::max(1.0, u.norm()))
      throw BadDirections("direction outside the span of the face normals");
    for (int j = i + 1; j < m; ++j)
      if (std::abs(u.dot(directions[j])) >
          1e-8 * std::max(1.0, u.norm() * directions[j].norm()))
        throw BadDirections("directions not orthogonal");
  }
  return ConeTester(a, f, directions)(x);
}

Eigen::VectorXd affine_hull_point(const Polytope& a, const FacetIndex& f) {
  const int m = f.level;
  Eigen::MatrixXd v(m, a.dim());
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    int j = f.indices[i];
    if (!a.finite(j)) throw InfiniteOffset("affine hull of a vacuous constraint");
    v.row(i) = a.normals.row(j);
    b[i] = a.offsets[j];
  }
  Eigen::MatrixXd gram = v * v.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible()) throw SingularGram("face normals are rank-deficient");
  return v.transpose() * lu.solve(b);  // min-norm solution, lies in span of normals
}

std::vector<Eigen::VectorXd> wedge_directions_pair(const Polytope& a, int j, int k) {
  FacetIndex f = FacetIndex::ridge(j, k);
  Eigen::VectorXd p = affine_hull_point(a, f);
  Eigen::VectorXd vj = a.normal(j);
  Eigen::VectorXd u = p.norm() > 1e-12 ? Eigen::VectorXd(p / p.norm()) : vj;
  // unit vector in span{v_j, v_k} orthogonal to u
  Eigen::VectorXd w = a.normal(k) - a.normal(k).dot(u) * u;
  if (w.norm() < 1e-12) w = vj - vj.dot(u) * u;
  if (w.norm() < 1e-12) throw BadDirections("pair span collapsed");
  w /= w.norm();
  return {u + w, u - w};
}

std::vector<Eigen::VectorXd> wedge_directions_triple(const Polytope& a, int j, int k,
                                                     int l) {
  FacetIndex f = FacetIndex::corner(j, k, l);
  Eigen::VectorXd p = affine_hull_point(a, f);
  Eigen::MatrixXd span(a.dim(), 3);
  span.col(0) = a.normal(j);
  span.col(1) = a.normal(k);
  span.col(2) = a.normal(l);
  Eigen::VectorXd u;
  if (p.norm() > 1e-12) {
    u = p / p.norm();
  } else {
    u = a.normal(j);
  }
  // orthonormal completion {w1, w2} of u within the triple span
  Eigen::MatrixXd basis(a.dim(), 3);
  basis.col(0) = u;
  int got = 1;
  for (int c = 0; c < 3 && got < 3; ++c) {
    Eigen::VectorXd w = span.col(c);
    for (int i = 0; i < got; ++i) w -= w.dot(basis.col(i)) * basis.col(i);
    if (w.norm() > 1e-10) {
      basis.col(got++) = w / w.norm();
    }
  }
  if (got < 3) throw BadDirections("triple span is not three-dimensional");
  Eigen::VectorXd w1 = basis.col(1), w2 = basis.col(2);
  const double is2 = 1.0 / std::sqrt(2.0);
  const double h = std::sqrt(3.0) / 2.0;
  return {w1 + is2 * u, -0.5 * w1 + h * w2 + is2 * u, -0.5 * w1 - h * w2 + is2 * u};
}

Polytope parse_polytope(const std::string& text) {
  std::istringstream in(text);
  int d = 0;
  if (!(in >> d) || d <= 0) throw IoError("polytope literal: bad dimension line");
  Polytope a;
  a.normals.resize(d, d);
  a.offsets.resize(d);
  for (int j = 0; j < d; ++j) {
    for (int c = 0; c < d; ++c)
      if (!(in >> a.normals(j, c))) throw IoError("polytope literal: bad normal entry");
    std::string tok;
    if (!(in >> tok)) throw IoError("polytope literal: missing offset");
    if (tok == "inf" || tok == "+inf") {
      a.offsets[j] = kInf;
    } else {
      try {
        a.offsets[j] = std::stod(tok);
      } catch (const std::exception&) {
        throw IoError("polytope literal: bad offset '" + tok + "'");
      }
    }
    double nrm = a.normals.row(j).norm();
    if (nrm < 1e-12) throw IoError("polytope literal: zero normal");
    if (std::abs(nrm - 1.0) > 1e-6)
      throw IoError("polytope literal: normal row not unit length");
    a.normals.row(j) /= nrm;
  }
  return a;
}

std::string format_polytope(const Polytope& a) {
  std::ostringstream out;
  out.precision(17);
  out << a.dim() << "\n";
  for (int j = 0; j < a.n_constraints(); ++j) {
    for (int c = 0; c < a.dim(); ++c) out << a.normals(j, c) << " ";
    if (a.finite(j))
      out << a.offsets[j];
    else
      out << "inf";
    out << "\n";
  }
  return out.str();
}

}  // namespace steinclt::polytope
