#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cbs/core.hpp"

namespace cbs::lattice2d {

/// Lattice spanned by l1, l2 with dual vectors a_i . l_j = 2 pi delta_ij.
class Lattice2D {
 public:
  Lattice2D(const Vec2& l1, const Vec2& l2) {
    direct_.col(0) = l1;
    direct_.col(1) = l2;
    const double det = direct_.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-14 * l1.squaredNorm() * l2.squaredNorm() || det == 0.0)
      fail(ErrorKind::InvalidGeometry, "lattice vectors are linearly dependent");
    area_ = std::abs(det);
    dual_ = 2.0 * pi * direct_.transpose().inverse();
  }

  static Lattice2D square(double L) { return Lattice2D(Vec2(L, 0.0), Vec2(0.0, L)); }

  Vec2 l1() const { return direct_.col(0); }
  Vec2 l2() const { return direct_.col(1); }
  Vec2 a1() const { return dual_.col(0); }
  Vec2 a2() const { return dual_.col(1); }
  const Eigen::Matrix2d& direct() const { return direct_; }
  const Eigen::Matrix2d& dual() const { return dual_; }
  double area() const { return area_; }

  Vec2 reduce(const Vec2& alpha) const { return reduce_alpha(alpha, direct_, dual_); }

 private:
  Eigen::Matrix2d direct_;
  Eigen::Matrix2d dual_;
  double area_ = 0.0;
};

struct DualTerm {
  Vec2 q;
  double weight;
};

/// Dual points q = m1 a1 + m2 a2 with |m_i| <= n, m1 outer, m2 inner.
///
/// When alpha lies on a zone face (its coordinate along a_i is a half
/// integer) the plain box is lopsided in p = alpha + q, which spoils the
/// p -> -p pairing behind real spectra at pinned quasimomenta. There the
/// sum is averaged over the two equivalent representatives of alpha, which
/// amounts to widening the box by one shell on one side and giving both
/// outer shells weight 1/2.
struct DualTruncation {
  int n = 10;

  std::size_t size() const { return static_cast<std::size_t>(2 * n + 1) * static_cast<std::size_t>(2 * n + 1); }

  std::vector<Vec2> points(const Lattice2D& lat) const {
    if (n < 0) fail(ErrorKind::InvalidArgument, "truncation order must be non-negative");
    std::vector<Vec2> out;
    out.reserve(size());
    for (int m1 = -n; m1 <= n; ++m1)
      for (int m2 = -n; m2 <= n; ++m2) out.push_back(m1 * lat.a1() + m2 * lat.a2());
    return out;
  }

  std::vector<DualTerm> terms(const Lattice2D& lat, const Vec2& alpha) const {
    if (n < 0) fail(ErrorKind::InvalidArgument, "truncation order must be non-negative");
    int lo[2], hi[2];
    bool face[2];
    for (int i = 0; i < 2; ++i) {
      const double c = alpha.dot(lat.direct().col(i)) / (2.0 * pi);
      const double f = c - std::floor(c);
      face[i] = std::abs(f - 0.5) < 1e-12;
      if (face[i]) {
        const double shift = std::round(c - 0.5);  // c = shift + 1/2
        lo[i] = -n - 1 - static_cast<int>(shift);
        hi[i] = n - static_cast<int>(shift);
      } else {
        lo[i] = -n;
        hi[i] = n;
      }
    }
    std::vector<DualTerm> out;
    out.reserve(static_cast<std::size_t>(hi[0] - lo[0] + 1) * static_cast<std::size_t>(hi[1] - lo[1] + 1));
    for (int m1 = lo[0]; m1 <= hi[0]; ++m1) {
      const double w1 = (face[0] && (m1 == lo[0] || m1 == hi[0])) ? 0.5 : 1.0;
      for (int m2 = lo[1]; m2 <= hi[1]; ++m2) {
        const double w2 = (face[1] && (m2 == lo[1] || m2 == hi[1])) ? 0.5 : 1.0;
        out.push_back({m1 * lat.a1() + m2 * lat.a2(), w1 * w2});
      }
    }
    return out;
  }
};

namespace detail {

/// k^2 + |beta|^2 - 2i beta.p - |p|^2, the shifted Helmholtz symbol.
inline cplx gap_denominator(const Vec2& p, const Vec2& beta, double k) {
  return cplx(k * k + beta.squaredNorm() - p.squaredNorm(), -2.0 * beta.dot(p));
}

inline void guard(cplx denom, const Vec2& p, const Vec2& q, const Tolerances& tol) {
  if (std::abs(denom) < tol.rayleigh_guard * (p.squaredNorm() + 1.0)) {
    fail(ErrorKind::RayleighSingular,
         "vanishing denominator at q = (" + std::to_string(q.x()) + ", " + std::to_string(q.y()) + ")");
  }
}

}  // namespace detail

/// Truncated spectral sum
/// (1/|Y|) sum_q e^{i(alpha+q).x} / (k^2 + |beta|^2 - 2i beta.(alpha+q) - |alpha+q|^2).
inline cplx greens_gap(const Vec2& x, const Quasimomentum2D& q, double k, const Lattice2D& lat,
                       const DualTruncation& trunc, const Tolerances& tol = {}) {
  cplx sum = 0.0;
  for (const auto& [qq, w] : trunc.terms(lat, q.alpha)) {
    const Vec2 p = q.alpha + qq;
    const cplx d = detail::gap_denominator(p, q.beta, k);
    detail::guard(d, p, qq, tol);
    sum += w * std::exp(I * p.dot(x)) / d;
  }
  return sum / lat.area();
}

/// The beta = 0 sum evaluated at the same alpha.
inline cplx greens_bulk(const Vec2& x, const Quasimomentum2D& q, double k, const Lattice2D& lat,
                        const DualTruncation& trunc, const Tolerances& tol = {}) {
  return greens_gap(x, make_quasimomentum(q.alpha, Vec2::Zero()), k, lat, trunc, tol);
}

/// G_gap - G_bulk as one sum with numerator 2i beta.p - |beta|^2 over both
/// denominators.
inline cplx greens_remainder(const Vec2& x, const Quasimomentum2D& q, double k, const Lattice2D& lat,
                             const DualTruncation& trunc, const Tolerances& tol = {}) {
  if (q.beta.isZero(0.0)) return 0.0;
  cplx sum = 0.0;
  for (const auto& [qq, w] : trunc.terms(lat, q.alpha)) {
    const Vec2 p = q.alpha + qq;
    const cplx d = detail::gap_denominator(p, q.beta, k);
    const double d0 = k * k - p.squaredNorm();
    detail::guard(d, p, qq, tol);
    detail::guard(d0, p, qq, tol);
    const cplx num(-q.beta.squaredNorm(), 2.0 * q.beta.dot(p));
    sum += w * std::exp(I * p.dot(x)) * num / (d * d0);
  }
  return sum / lat.area();
}

struct RayleighPoint {
  double beta_norm;
  Vec2 q;
};

/// |beta| at which a term of the sum blows up along beta_dir: (alpha+q) is
/// perpendicular to beta_dir and |alpha+q|^2 = k^2 + |beta|^2.
inline std::vector<RayleighPoint> rayleigh_singularities(const Vec2& alpha, double k, const Vec2& beta_dir,
                                                         const Lattice2D& lat, double search_radius) {
  if (std::abs(beta_dir.norm() - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "beta_dir must be a unit vector");
  if (!(search_radius > 0.0)) fail(ErrorKind::InvalidArgument, "search radius must be positive");
  const double amin = std::min(lat.a1().norm(), lat.a2().norm());
  // Generous index bound; points outside the radius are filtered below.
  const double sine = std::abs(lat.a1().x() * lat.a2().y() - lat.a1().y() * lat.a2().x()) /
                      (lat.a1().norm() * lat.a2().norm());
  const int n = static_cast<int>(std::ceil((search_radius + alpha.norm()) / (amin * sine))) + 1;
  std::vector<RayleighPoint> out;
  for (int m1 = -n; m1 <= n; ++m1) {
    for (int m2 = -n; m2 <= n; ++m2) {
      const Vec2 qq = m1 * lat.a1() + m2 * lat.a2();
      if (qq.norm() > search_radius) continue;
      const Vec2 p = alpha + qq;
      if (std::abs(p.dot(beta_dir)) >= 1e-10) continue;
      const double r2 = p.squaredNorm() - k * k;
      if (r2 < 0.0) continue;
      out.push_back({std::sqrt(r2), qq});
    }
  }
  std::sort(out.begin(), out.end(), [](const RayleighPoint& a, const RayleighPoint& b) {
    if (a.beta_norm != b.beta_norm) return a.beta_norm < b.beta_norm;
    if (a.q.x() != b.q.x()) return a.q.x() < b.q.x();
    return a.q.y() < b.q.y();
  });
  return out;
}

/// Distinct |beta| values from rayleigh_singularities, merged within `merge`.
inline std::vector<double> rayleigh_values(const std::vector<RayleighPoint>& pts, double merge = 1e-9) {
  std::vector<double> out;
  for (const auto& p : pts) {
    if (out.empty() || p.beta_norm - out.back() > merge) out.push_back(p.beta_norm);
  }
  return out;
}

struct ConvergenceRow {
  int n;
  double error;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double order = 0.0;  // minus the log-log slope; 0 when every error vanishes
  cplx reference;
  int n_ref = 0;
};

/// error(n) = |G_R(n) - G_R(n_ref)| and the least-squares order over rows
/// with non-zero error.
inline ConvergenceReport truncation_convergence(const Vec2& x, const Quasimomentum2D& q, double k,
                                                const Lattice2D& lat, const std::vector<int>& n_list, int n_ref,
                                                const Tolerances& tol = {}, unsigned threads = 1) {
  for (int n : n_list) {
    if (n < 0) fail(ErrorKind::InvalidArgument, "truncation orders must be non-negative");
    if (n >= n_ref) fail(ErrorKind::InvalidArgument, "n_ref must exceed every n in the list");
  }
  ConvergenceReport rep;
  rep.n_ref = n_ref;
  rep.reference = greens_remainder(x, q, k, lat, DualTruncation{n_ref}, tol);
  std::vector<double> err(n_list.size());
  parallel_for(n_list.size(), threads, [&](std::size_t i) {
    err[i] = std::abs(greens_remainder(x, q, k, lat, DualTruncation{n_list[i]}, tol) - rep.reference);
  });
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    rep.rows.push_back({n_list[i], err[i]});
    if (err[i] > 0.0 && n_list[i] > 0) {
      const double lx = std::log(static_cast<double>(n_list[i]));
      const double ly = std::log(err[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++used;
    }
  }
  if (used >= 2) {
    const double m = static_cast<double>(used);
    rep.order = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return rep;
}

}  // namespace cbs::lattice2d
