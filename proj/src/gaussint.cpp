#include "steinclt/gaussint.hpp"

#include <algorithm>
#include <cmath>

#include "steinclt/errors.hpp"
#include "steinclt/normal.hpp"

namespace steinclt::gaussint {

namespace {

constexpr double kCoefEps = 1e-15;    // terms with smaller |coefficient| are exact zeros
constexpr double kDensityFloor = 1e-300;
constexpr double kRankTol = 1e-10;

std::uint64_t face_salt(const FacetIndex& f, int m) {
  std::uint64_t s = static_cast<std::uint64_t>(f.level) << 28;
  for (int i = 0; i < f.level; ++i) s = s * static_cast<std::uint64_t>(m + 1) + f.indices[i] + 1;
  return s;
}

/// Orthonormal completion of the columns of w (d x m, full column rank):
/// returns d x (d-m) with columns spanning the orthogonal complement.
Eigen::MatrixXd completion_of(const Eigen::MatrixXd& w) {
  const int d = static_cast<int>(w.rows());
  const int m = static_cast<int>(w.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(d - m);
}

enum class FaceStatus { proper, empty, degenerate };

/// Rank/consistency classification of the active-constraint system.
FaceStatus classify_face(const Polytope& a, const FacetIndex& f) {
  const int m = f.level;
  Eigen::MatrixXd v(m, a.dim());
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    v.row(i) = a.normals.row(f.indices[i]);
    b[i] = a.offsets[f.indices[i]];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double thresh = kRankTol * std::max(1.0, svd.singularValues()(0));
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thresh) ++rank;
  if (rank == m) return FaceStatus::proper;
  Eigen::VectorXd x = svd.solve(b);
  return (v * x - b).cwiseAbs().maxCoeff() > 1e-9 ? FaceStatus::empty
                                                  : FaceStatus::degenerate;
}

template <typename Pred>
McEstimate mc_probability(int d, std::int64_t n, std::uint64_t seed, Pred&& inside) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd z(d);
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) z[c] = nd(rng);
    if (inside(z)) ++hits;
  }
  McEstimate e;
  e.value = static_cast<double>(hits) / static_cast<double>(n);
  e.stderr_ = binomial_stderr(e.value, n);
  e.n_samples = n;
  e.seed = seed;
  return e;
}

struct Term {
  double coef = 0.0;
  FacetIndex face;
};

/// Evaluates coef-weighted face integrals concurrently over independent
/// substreams and reduces in fixed order.
McEstimate evaluate_terms(const Polytope& a, const std::vector<Term>& terms,
                          const Eigen::VectorXd& shift, std::int64_t n,
                          std::uint64_t seed) {
  std::vector<const Term*> live;
  for (const auto& t : terms)
    if (std::abs(t.coef) > kCoefEps) live.push_back(&t);
  auto results = parallel_map(live.size(), [&](std::size_t i) {
    const Term& t = *live[i];
    std::uint64_t s = derive_seed(seed, face_salt(t.face, a.n_constraints()));
    if (t.face.level == 1)
      return facet_surface_integral(a, t.face.indices[0], shift, n, s);
    return ridge_surface_integral(a, t.face, shift, n, s);
  });
  std::vector<double> coefs(live.size());
  for (std::size_t i = 0; i < live.size(); ++i) coefs[i] = live[i]->coef;
  McEstimate out = combine_linear(coefs, results);
  out.seed = seed;
  if (out.n_samples == 0) out.n_samples = n;
  return out;
}

}  // namespace

McEstimate mc_region_measure(const Region& region, const Eigen::VectorXd& shift,
                             std::int64_t n, std::uint64_t seed) {
  if (n < 1000) throw ShapeMismatch("mc_region_measure: n must be >= 1000");
  return std::visit(
      [&](const auto& r) -> McEstimate {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Polytope>) {
          return mc_probability(r.dim(), n, seed, [&](const Eigen::VectorXd& z) {
            return polytope::contains(r, z + shift);
          });
        } else if constexpr (std::is_same_v<T, BandRegion>) {
          Polytope hi = polytope::inflate(r.a, r.kappa);
          Polytope lo = polytope::inflate(r.a, -r.kappa);
          return mc_probability(r.a.dim(), n, seed, [&](const Eigen::VectorXd& z) {
            Eigen::VectorXd x = z + shift;
            return polytope::contains(hi, x) && !polytope::contains(lo, x);
          });
        } else if constexpr (std::is_same_v<T, ConeRegion>) {
          auto tester = polytope::ConeTester::outer(r.a, r.f);
          return mc_probability(r.a.dim(), n, seed, [&](const Eigen::VectorXd& z) {
            return tester(z + shift);
          });
        } else {
          polytope::ConeTester tester(r.a, r.f, r.directions);
          return mc_probability(r.a.dim(), n, seed, [&](const Eigen::VectorXd& z) {
            return tester(z + shift);
          });
        }
      },
      region);
}

McEstimate facet_surface_integral(const Polytope& a, int j, const Eigen::VectorXd& shift,
                                  std::int64_t n, std::uint64_t seed) {
  if (!a.finite(j)) throw InfiniteOffset("facet of a vacuous constraint");
  const int d = a.dim();
  const Eigen::VectorXd vj = a.normal(j);
  const double c = a.offsets[j] - vj.dot(shift);
  const double density = normal_pdf(c);
  McEstimate e;
  e.n_samples = n;
  e.seed = seed;
  if (density < kDensityFloor) return e;

  Eigen::MatrixXd u = completion_of(vj);
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd y(d - 1), z(d);
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int r = 0; r < d - 1; ++r) y[r] = nd(rng);
    z = shift + u * y + c * vj;  // lies on the hyperplane v_j . z = b_j
    bool ok = true;
    for (int m = 0; m < a.n_constraints() && ok; ++m) {
      if (m == j || !a.finite(m)) continue;
      ok = a.normals.row(m).dot(z) <= a.offsets[m];
    }
    if (ok) ++hits;
  }
  double p = static_cast<double>(hits) / static_cast<double>(n);
  e.value = density * p;
  e.stderr_ = density * binomial_stderr(p, n);
  return e;
}

McEstimate ridge_surface_integral(const Polytope& a, const FacetIndex& f,
                                  const Eigen::VectorXd& shift, std::int64_t n,
                                  std::uint64_t seed) {
  const int m = f.level;
  if (m < 2 || m > 3) throw ShapeMismatch("ridge integral needs a level-2/3 face");
  const int d = a.dim();
  Eigen::MatrixXd v(m, d);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    int j = f.indices[i];
    if (!a.finite(j)) throw InfiniteOffset("ridge of a vacuous constraint");
    v.row(i) = a.normals.row(j);
    b[i] = a.offsets[j];
  }
  Eigen::MatrixXd gram = v * v.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible()) throw SingularGram("face normals rank-deficient");
  Eigen::VectorXd p = v.transpose() * lu.solve(b);  // min-norm hull point

  // orthonormal split R^d = span(normals) + completion
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v.transpose());
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd wbasis = q.leftCols(m);
  Eigen::MatrixXd u = q.rightCols(d - m);

  const Eigen::VectorXd rel = p - shift;
  const double dist2 = (wbasis.transpose() * rel).squaredNorm();
  const double prefactor =
      std::pow(2.0 * M_PI, -0.5 * m) * std::exp(-0.5 * dist2);
  McEstimate e;
  e.n_samples = n;
  e.seed = seed;
  if (prefactor < kDensityFloor) return e;

  const Eigen::VectorXd w0 = u.transpose() * rel;
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd y(d - m), z(d);
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int r = 0; r < d - m; ++r) y[r] = nd(rng);
    z = p + u * (y - w0);
    bool ok = true;
    for (int c = 0; c < a.n_constraints() && ok; ++c) {
      if (!a.finite(c)) continue;
      bool active = false;
      for (int i2 = 0; i2 < m; ++i2) active |= (f.indices[i2] == c);
      if (active) continue;
      ok = a.normals.row(c).dot(z) <= a.offsets[c];
    }
    if (ok) ++hits;
  }
  double phat = static_cast<double>(hits) / static_cast<double>(n);
  e.value = prefactor * phat;
  e.stderr_ = prefactor * binomial_stderr(phat, n);
  return e;
}

McEstimate grad_integral(const Polytope& a, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& shift, std::int64_t n,
                         std::uint64_t seed) {
  std::vector<Term> terms;
  for (int j = 0; j < a.n_constraints(); ++j) {
    if (!a.finite(j)) continue;
    terms.push_back({u.dot(a.normal(j)), FacetIndex::facet(j)});
  }
  return evaluate_terms(a, terms, shift, n, seed);
}

McEstimate hessian_integral(const Polytope& a, const DerivedNormals& dn,
                            const Eigen::MatrixXd& m, std::int64_t n, std::uint64_t seed,
                            const Eigen::VectorXd* shift) {
  const Eigen::VectorXd x = shift ? *shift : Eigen::VectorXd::Zero(a.dim());
  std::vector<Term> terms;
  for (int j = 0; j < a.n_constraints(); ++j) {
    if (!a.finite(j)) continue;
    const Eigen::VectorXd vj = a.normal(j);
    double c = a.offsets[j] - vj.dot(x);
    // d/dv_j phi = -(v_j . z) phi, frozen at the facet offset
    terms.push_back({vj.dot(m * vj) * (-c), FacetIndex::facet(j)});
  }
  for (int j = 0; j < a.n_constraints(); ++j)
    for (int k = j + 1; k < a.n_constraints(); ++k) {
      if (!a.finite(j) || !a.finite(k)) continue;
      FacetIndex f = FacetIndex::ridge(j, k);
      FaceStatus st = classify_face(a, f);
      if (st == FaceStatus::empty) continue;
      if (st == FaceStatus::degenerate)
        throw SingularGram("ridge system degenerate; regularize the polytope");
      const Eigen::VectorXd vj = a.normal(j), vk = a.normal(k);
      double coef = vj.dot(m * dn.pair(j, k)) + vk.dot(m * dn.pair(k, j));
      terms.push_back({coef, f});
    }
  return evaluate_terms(a, terms, x, n, seed);
}

McEstimate third_integral(const Polytope& a, const DerivedNormals& dn, const Tensor3& t,
                          std::int64_t n, std::uint64_t seed,
                          const Eigen::VectorXd* shift) {
  const Eigen::VectorXd x = shift ? *shift : Eigen::VectorXd::Zero(a.dim());
  const int mcount = a.n_constraints();
  std::vector<Term> terms;
  // facet terms: second directional derivative reduces to (c^2 - 1) phi
  for (int j = 0; j < mcount; ++j) {
    if (!a.finite(j)) continue;
    const Eigen::VectorXd vj = a.normal(j);
    double c = a.offsets[j] - vj.dot(x);
    terms.push_back({t.contract(vj, vj, vj) * (c * c - 1.0), FacetIndex::facet(j)});
  }
  // ridge terms: two directional factors frozen at the affine hull
  for (int j = 0; j < mcount; ++j)
    for (int k = j + 1; k < mcount; ++k) {
      if (!a.finite(j) || !a.finite(k)) continue;
      FacetIndex f = FacetIndex::ridge(j, k);
      FaceStatus st = classify_face(a, f);
      if (st == FaceStatus::empty) continue;
      if (st == FaceStatus::degenerate)
        throw SingularGram("ridge system degenerate; regularize the polytope");
      Eigen::VectorXd p = polytope::affine_hull_point(a, f);
      const Eigen::VectorXd vj = a.normal(j), vk = a.normal(k);
      const Eigen::VectorXd& vjk = dn.pair(j, k);
      const Eigen::VectorXd& vkj = dn.pair(k, j);
      double cj = a.offsets[j] - vj.dot(x);
      double ck = a.offsets[k] - vk.dot(x);
      double coef = -cj * (t.contract(vj, vj, vjk) + t.contract(vj, vjk, vj)) -
                    ck * (t.contract(vk, vk, vkj) + t.contract(vk, vkj, vk)) -
                    vjk.dot(p - x) * t.contract(vj, vjk, vjk) -
                    vkj.dot(p - x) * t.contract(vk, vkj, vkj);
      terms.push_back({coef, f});
    }
  // corner terms: all six ordered labelings share one surface integral
  for (int j = 0; j < mcount; ++j)
    for (int k = j + 1; k < mcount; ++k)
      for (int l = k + 1; l < mcount; ++l) {
        if (!a.finite(j) || !a.finite(k) || !a.finite(l)) continue;
        FacetIndex f = FacetIndex::corner(j, k, l);
        FaceStatus st = classify_face(a, f);
        if (st == FaceStatus::empty) continue;
        if (st == FaceStatus::degenerate)
          throw MissingTripleNormal("triple normals span < 3 dims with consistent offsets");
        const Eigen::VectorXd vj = a.normal(j), vk = a.normal(k), vl = a.normal(l);
        const Eigen::VectorXd& vjkl = dn.triple(j, k, l);
        const Eigen::VectorXd& vjlk = dn.triple(j, l, k);
        const Eigen::VectorXd& vklj = dn.triple(k, l, j);
        double coef = t.contract(vj, dn.pair(j, k), vjkl) +
                      t.contract(vk, dn.pair(k, j), vjkl) +
                      t.contract(vj, dn.pair(j, l), vjlk) +
                      t.contract(vl, dn.pair(l, j), vjlk) +
                      t.contract(vk, dn.pair(k, l), vklj) +
                      t.contract(vl, dn.pair(l, k), vklj);
        terms.push_back({coef, f});
      }
  return evaluate_terms(a, terms, x, n, seed);
}

McEstimate volume_integral_oracle(const Polytope& a, const DerivativeCoefficient& coeff,
                                  const Eigen::VectorXd& shift, std::int64_t n,
                                  std::uint64_t seed) {
  const int d = a.dim();
  Eigen::VectorXd tr1, tr2, tr3;
  if (coeff.order == 3) {
    tr1 = Eigen::VectorXd::Zero(d);
    tr2 = Eigen::VectorXd::Zero(d);
    tr3 = Eigen::VectorXd::Zero(d);
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q) {
        tr1[p] += coeff.t(p, q, q);
        tr2[p] += coeff.t(q, p, q);
        tr3[p] += coeff.t(q, q, p);
      }
  }
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd z(d);
  MeanVar acc;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) z[c] = nd(rng);
    double h = 0.0;
    if (polytope::contains(a, z + shift)) {
      switch (coeff.order) {
        case 1:
          h = -coeff.u.dot(z);
          break;
        case 2:
          h = z.dot(coeff.m * z) - coeff.m.trace();
          break;
        case 3:
          h = -(coeff.t.contract(z, z, z) - tr1.dot(z) - tr2.dot(z) - tr3.dot(z));
          break;
        default:
          throw ShapeMismatch("oracle: order must be 1, 2 or 3");
      }
    }
    acc.add(h);
  }
  McEstimate e;
  e.value = acc.mean();
  e.stderr_ = acc.stderr_of_mean();
  e.n_samples = n;
  e.seed = seed;
  return e;
}

McEstimate shifted_grad_integral(const Polytope& a, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& x, std::int64_t n,
                                 std::uint64_t seed) {
  return grad_integral(a, u, x, n, seed);
}

McEstimate shifted_third_integral(const Polytope& a, const DerivedNormals& dn,
                                  const Tensor3& t, const Eigen::VectorXd& x,
                                  std::int64_t n, std::uint64_t seed) {
  return third_integral(a, dn, t, n, seed, &x);
}

namespace {

void collect_families(const Eigen::MatrixXd& normals, const DerivedNormals& dn,
                      std::vector<Eigen::VectorXd>& v1, std::vector<Eigen::VectorXd>& v2,
                      std::vector<Eigen::VectorXd>& v3) {
  const int m = static_cast<int>(normals.rows());
  for (int j = 0; j < m; ++j) v1.push_back(normals.row(j).transpose());
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      if (j != k && dn.pair_defined(j, k)) v2.push_back(dn.pair(j, k));
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k)
      for (int l = 0; l < m; ++l)
        if (l != j && l != k && dn.triple_defined(j, k, l))
          v3.push_back(dn.triple(j, k, l));
}

}  // namespace

double aht_bound_rhs(int order, const Eigen::MatrixXd& normals, const DerivedNormals& dn,
                     const DerivativeCoefficient& coeff, double alpha_angle,
                     double beta_angle) {
  const int m = static_cast<int>(normals.rows());
  const double logd = std::log(static_cast<double>(m));
  if (order == 1) {
    double best = 0.0;
    for (int j = 0; j < m; ++j)
      best = std::max(best, std::abs(coeff.u.dot(normals.row(j).transpose())));
    return std::sqrt(logd) * best;
  }
  if (order == 2) {
    double best = 0.0;
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        if (j == k || !dn.pair_defined(j, k)) continue;
        Eigen::VectorXd vj = normals.row(j).transpose();
        const Eigen::VectorXd& vjk = dn.pair(j, k);
        double s = std::abs(vj.dot(coeff.m * vj)) + std::abs(vj.dot(coeff.m * vjk)) +
                   std::abs(vjk.dot(coeff.m * vjk));
        best = std::max(best, s);
      }
    return logd * best;
  }
  if (order == 3) {
    if (!(alpha_angle > 0.0) || !(beta_angle > 0.0))
      throw ZeroAngle("order-3 bound needs positive angle floors");
    std::vector<Eigen::VectorXd> v1, v2, v3;
    collect_families(normals, dn, v1, v2, v3);
    std::vector<Eigen::VectorXd> fam2 = v1, fam3 = v1;
    fam2.insert(fam2.end(), v2.begin(), v2.end());
    fam3.insert(fam3.end(), v2.begin(), v2.end());
    fam3.insert(fam3.end(), v3.begin(), v3.end());
    const int d = static_cast<int>(normals.cols());
    double best = 0.0;
    for (const auto& a : v1) {
      // contract the first slot once, then scan matrix bilinear forms
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
      for (int p = 0; p < d; ++p) {
        if (a[p] == 0.0) continue;
        for (int q = 0; q < d; ++q)
          for (int r = 0; r < d; ++r) s(q, r) += a[p] * coeff.t(p, q, r);
      }
      for (const auto& b : fam2) {
        Eigen::VectorXd sb = s.transpose() * b;
        for (const auto& c : fam3) best = std::max(best, std::abs(sb.dot(c)));
      }
    }
    return std::pow(logd, 1.5) / (alpha_angle * beta_angle) * best;
  }
  throw ShapeMismatch("aht_bound_rhs: order must be 1, 2 or 3");
}

double vanish_bound_rhs_order1(const Polytope& a, double kappa,
                               const Eigen::VectorXd& u) {
  double best = 0.0;
  for (int j = 0; j < a.n_constraints(); ++j)
    best = std::max(best, std::abs(u.dot(a.normal(j))));
  return a.n_constraints() * normal_pdf(kappa) * best;
}

double vanish_bound_rhs_order3(const Polytope& a, const DerivedNormals& dn, double kappa,
                               const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                               const Eigen::VectorXd& u3) {
  std::vector<Eigen::VectorXd> v1, v2, v3;
  collect_families(a.normals, dn, v1, v2, v3);
  auto max_dot = [](const Eigen::VectorXd& u, const std::vector<Eigen::VectorXd>& fam) {
    double best = 0.0;
    for (const auto& v : fam) best = std::max(best, std::abs(u.dot(v)));
    return best;
  };
  double m1 = max_dot(u1, v1);
  double m2 = std::max(max_dot(u2, v1), max_dot(u2, v2));
  double m3 = std::max({max_dot(u3, v1), max_dot(u3, v2), max_dot(u3, v3)});
  double d3 = std::pow(static_cast<double>(a.n_constraints()), 3.0);
  return d3 * std::exp(-kappa * kappa / 4.0) * m1 * m2 * m3;
}

NazarovCheck nazarov_check(const Eigen::MatrixXd& normals, const Eigen::VectorXd& b,
                           double eps, std::int64_t n, std::uint64_t seed,
                           double sigma_lower) {
  if (eps < 0.0) throw ShapeMismatch("nazarov_check: eps must be >= 0");
  const int m = static_cast<int>(normals.rows());
  Polytope a{normals, b};
  Polytope hi = polytope::inflate(a, eps);
  NazarovCheck out;
  out.lhs = mc_probability(a.dim(), n, seed, [&](const Eigen::VectorXd& z) {
    return polytope::contains(hi, z) && !polytope::contains(a, z);
  });
  out.rhs = eps * (std::sqrt(2.0 * std::log(static_cast<double>(m))) + 2.0) / sigma_lower;
  return out;
}

CornerConeCheck corner_cone_inequality_check(const Polytope& a, const DerivedNormals& dn,
                                             int j, int k, int l, double alpha_angle,
                                             double beta_angle, std::int64_t n,
                                             std::uint64_t seed) {
  (void)dn;
  CornerConeCheck out;
  FacetIndex f = FacetIndex::corner(j, k, l);
  const double logd = std::log(static_cast<double>(a.n_constraints()));
  Eigen::VectorXd p = polytope::affine_hull_point(a, f);
  if (p.norm() > std::sqrt(6.0 * logd)) return out;  // outside the targeted regime
  out.applicable = true;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(a.dim());
  out.lhs = ridge_surface_integral(a, f, zero, n, derive_seed(seed, 1));
  out.cone_measure =
      mc_region_measure(ConeRegion{a, f}, zero, n, derive_seed(seed, 2));
  out.rhs_scale = std::pow(logd, 1.5) / (alpha_angle * beta_angle);
  out.rhs = out.rhs_scale * out.cone_measure.value;
  out.ratio = out.rhs > 0.0 ? out.lhs.value / out.rhs
                            : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace steinclt::gaussint
