#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "cbs/core.hpp"
#include "cbs/lattice2d.hpp"

namespace cbs::multipole2d {

using lattice2d::DualTruncation;
using lattice2d::Lattice2D;

struct CircularResonator {
  Vec2 center = Vec2::Zero();
  double radius = 0.05;
  double wave_speed = 1.0;

  double area() const { return pi * radius * radius; }
};

/// Radii and speeds positive, every disk inside the cell centred at the
/// origin, and no two disks (periodic images included) touching.
inline void validate_resonators(const std::vector<CircularResonator>& res, const Lattice2D& lat) {
  if (res.empty()) fail(ErrorKind::InvalidGeometry, "need at least one resonator");
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& r = res[i];
    if (!(r.radius > 0.0) || !std::isfinite(r.radius))
      fail(ErrorKind::InvalidGeometry, "radius must be positive (resonator " + std::to_string(i) + ")");
    if (!(r.wave_speed > 0.0) || !std::isfinite(r.wave_speed))
      fail(ErrorKind::InvalidGeometry, "wave speed must be positive (resonator " + std::to_string(i) + ")");
    if (!r.center.allFinite()) fail(ErrorKind::InvalidGeometry, "centre must be finite");
    for (int a = 0; a < 2; ++a) {
      const double s = lat.dual().col(a).dot(r.center) / (2.0 * pi);
      const double width = lat.area() / lat.direct().col(1 - a).norm();
      if ((0.5 - std::abs(s)) * width < r.radius)
        fail(ErrorKind::InvalidGeometry, "resonator " + std::to_string(i) + " leaves the unit cell");
    }
  }
  for (std::size_t i = 0; i < res.size(); ++i) {
    for (std::size_t j = i; j < res.size(); ++j) {
      for (int m1 = -1; m1 <= 1; ++m1) {
        for (int m2 = -1; m2 <= 1; ++m2) {
          if (i == j && m1 == 0 && m2 == 0) continue;
          const Vec2 shift = m1 * lat.l1() + m2 * lat.l2();
          if ((res[i].center - res[j].center - shift).norm() <= res[i].radius + res[j].radius)
            fail(ErrorKind::InvalidGeometry,
                 "resonators " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
        }
      }
    }
  }
}

/// J_0(x) .. J_order(x). Two library calls, then downward recurrence.
inline std::vector<double> bessel_j_range(int order, double x) {
  std::vector<double> J(static_cast<std::size_t>(order) + 1, 0.0);
  if (x == 0.0) {
    J[0] = 1.0;
    return J;
  }
  if (x > static_cast<double>(order)) {
    for (int m = 0; m <= order; ++m) J[static_cast<std::size_t>(m)] = std::cyl_bessel_j(static_cast<double>(m), x);
    return J;
  }
  double hi = std::cyl_bessel_j(static_cast<double>(order) + 1.0, x);
  double cur = std::cyl_bessel_j(static_cast<double>(order), x);
  J[static_cast<std::size_t>(order)] = cur;
  for (int m = order; m >= 1; --m) {
    const double lo = 2.0 * m / x * cur - hi;
    J[static_cast<std::size_t>(m - 1)] = lo;
    hi = cur;
    cur = lo;
  }
  return J;
}

/// Fourier coefficients of e^{sign beta.y} on a circle of radius R about the
/// origin: f_n = e^{-in psi} I_n(R|beta|), psi = arg(sign beta), n = -K..K.
inline VectorXc exp_beta_fourier(const Vec2& beta, double R, int K, int sign = 1) {
  if (!(R > 0.0)) fail(ErrorKind::InvalidArgument, "radius must be positive");
  if (K < 0) fail(ErrorKind::InvalidArgument, "K must be non-negative");
  if (sign != 1 && sign != -1) fail(ErrorKind::InvalidArgument, "sign must be +1 or -1");
  VectorXc f = VectorXc::Zero(2 * K + 1);
  const double z = R * beta.norm();
  if (z == 0.0) {
    f(K) = 1.0;
    return f;
  }
  const Vec2 b = static_cast<double>(sign) * beta;
  const double psi = std::atan2(b.y(), b.x());
  for (int n = -K; n <= K; ++n) {
    // I_{-n} = I_n for integer order.
    const double In = std::cyl_bessel_i(static_cast<double>(std::abs(n)), z);
    f(n + K) = std::exp(cplx(0.0, -n * psi)) * In;
  }
  return f;
}

/// Fourier-basis single-layer potential with the spectral kernel.
///
/// Entry ((i,m),(j,n)) is sum_q A_i(m,q) B_j(n,q) / D_q with
///   A_i(m,q) = e^{ip.c_i} e^{-im psi} i^m J_m(r_i |p|),
///   B_j(n,q) = (2 pi r_j / |Y|) e^{-ip.c_j} e^{in psi} i^{-n} J_n(r_j |p|),
/// p = alpha + q, psi = arg p. Only the denominator depends on beta, so
/// everything else is cached for a fixed alpha.
class SlpAssembler {
 public:
  SlpAssembler(std::vector<CircularResonator> res, const Vec2& alpha, double k, const Lattice2D& lat, int K,
               DualTruncation trunc, Tolerances tol = {})
      : res_(std::move(res)), alpha_(alpha), k_(k), K_(K), tol_(tol) {
    if (K < 0) fail(ErrorKind::InvalidArgument, "K must be non-negative");
    validate_resonators(res_, lat);
    const auto qs = trunc.terms(lat, alpha);
    const Eigen::Index nq = static_cast<Eigen::Index>(qs.size());
    const Eigen::Index dim = static_cast<Eigen::Index>(res_.size()) * (2 * K + 1);
    q_.resize(qs.size());
    p_.resize(qs.size());
    w_.resize(qs.size());
    A_.resize(dim, nq);
    B_.resize(nq, dim);
    for (Eigen::Index c = 0; c < nq; ++c) {
      const auto& term = qs[static_cast<std::size_t>(c)];
      const Vec2 p = alpha + term.q;
      q_[static_cast<std::size_t>(c)] = term.q;
      p_[static_cast<std::size_t>(c)] = p;
      w_[static_cast<std::size_t>(c)] = term.weight;
      const double rho = p.norm();
      const double psi = rho > 0.0 ? std::atan2(p.y(), p.x()) : 0.0;
      for (std::size_t i = 0; i < res_.size(); ++i) {
        const double r = res_[i].radius;
        const auto J = bessel_j_range(K, r * rho);
        const cplx out_phase = std::exp(I * p.dot(res_[i].center));
        const double scale = 2.0 * pi * r / lat.area();
        for (int m = -K; m <= K; ++m) {
          const double Jm = (m < 0 && (m & 1)) ? -J[static_cast<std::size_t>(-m)] : J[static_cast<std::size_t>(std::abs(m))];
          const cplx im = ipow(m);
          const cplx e = std::exp(cplx(0.0, -m * psi));
          const Eigen::Index row = static_cast<Eigen::Index>(i) * (2 * K + 1) + (m + K);
          A_(row, c) = out_phase * e * im * Jm;
          B_(c, row) = scale * std::conj(out_phase) * std::conj(e) * std::conj(im) * Jm;
        }
      }
    }
  }

  int order() const { return K_; }
  Eigen::Index dimension() const { return A_.rows(); }
  const std::vector<CircularResonator>& resonators() const { return res_; }
  const Vec2& alpha() const { return alpha_; }

  MatrixXc full(const Vec2& beta) const {
    return assemble([&](const Vec2& p, const Vec2& q) {
      const cplx d = lattice2d::detail::gap_denominator(p, beta, k_);
      lattice2d::detail::guard(d, p, q, tol_);
      return 1.0 / d;
    });
  }

  MatrixXc bulk() const {
    return assemble([&](const Vec2& p, const Vec2& q) {
      const double d0 = k_ * k_ - p.squaredNorm();
      lattice2d::detail::guard(d0, p, q, tol_);
      return cplx(1.0 / d0);
    });
  }

  MatrixXc remainder(const Vec2& beta) const {
    return assemble([&](const Vec2& p, const Vec2& q) {
      const cplx d = lattice2d::detail::gap_denominator(p, beta, k_);
      const double d0 = k_ * k_ - p.squaredNorm();
      lattice2d::detail::guard(d, p, q, tol_);
      lattice2d::detail::guard(d0, p, q, tol_);
      return cplx(-beta.squaredNorm(), 2.0 * beta.dot(p)) / (d * d0);
    });
  }

 private:
  static cplx ipow(int m) {
    switch (((m % 4) + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }

  template <class W>
  MatrixXc assemble(W weight) const {
    VectorXc w(static_cast<Eigen::Index>(p_.size()));
    for (std::size_t c = 0; c < p_.size(); ++c) w(static_cast<Eigen::Index>(c)) = w_[c] * weight(p_[c], q_[c]);
    MatrixXc S = (A_ * w.asDiagonal()) * B_;
    if (!S.allFinite()) fail(ErrorKind::NonFinite, "single-layer matrix has non-finite entries");
    return S;
  }

  std::vector<CircularResonator> res_;
  Vec2 alpha_;
  double k_;
  int K_;
  Tolerances tol_;
  std::vector<Vec2> q_;
  std::vector<Vec2> p_;
  std::vector<double> w_;
  MatrixXc A_;
  MatrixXc B_;
};

inline MatrixXc slp_matrix(const std::vector<CircularResonator>& res, const Quasimomentum2D& q, double k,
                           const Lattice2D& lat, int K, DualTruncation trunc, const Tolerances& tol = {}) {
  return SlpAssembler(res, q.alpha, k, lat, K, trunc, tol).full(q.beta);
}

struct SlpParts {
  MatrixXc full;
  MatrixXc bulk;
  MatrixXc remainder;
};

inline SlpParts slp_parts(const std::vector<CircularResonator>& res, const Quasimomentum2D& q, double k,
                          const Lattice2D& lat, int K, DualTruncation trunc, const Tolerances& tol = {}) {
  SlpAssembler a(res, q.alpha, k, lat, K, trunc, tol);
  return {a.full(q.beta), a.bulk(), a.remainder(q.beta)};
}

struct CapacitanceResult {
  MatrixXc C;          // weighted by v_i^2 / |D_i|
  MatrixXc densities;  // column j holds psi_j
  double condition = 0.0;
};

/// Generalized capacitance at k = 0 for any beta with alpha fixed.
class CapacitanceSolver {
 public:
  CapacitanceSolver(const std::vector<CircularResonator>& res, const Vec2& alpha, const Lattice2D& lat, int K,
                    DualTruncation trunc, Tolerances tol = {})
      : slp_(res, alpha, 0.0, lat, K, trunc, tol), tol_(tol) {}

  const SlpAssembler& slp() const { return slp_; }

  CapacitanceResult operator()(const Vec2& beta) const {
    const auto& res = slp_.resonators();
    const int K = slp_.order();
    const Eigen::Index block = 2 * K + 1;
    const auto N = static_cast<Eigen::Index>(res.size());

    const MatrixXc S = slp_.full(beta);
    Eigen::JacobiSVD<MatrixXc> svd(S);
    const auto& sv = svd.singularValues();
    CapacitanceResult out;
    const double smin = sv(sv.size() - 1);
    out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(out.condition <= tol_.slp_condition_cap))
      fail(ErrorKind::SingularSLP, "condition number " + std::to_string(out.condition) + " exceeds cap");

    MatrixXc rhs = MatrixXc::Zero(S.rows(), N);
    for (Eigen::Index j = 0; j < N; ++j) {
      const auto& r = res[static_cast<std::size_t>(j)];
      rhs.block(j * block, j, block, 1) = std::exp(beta.dot(r.center)) * exp_beta_fourier(beta, r.radius, K, +1);
    }
    out.densities = S.partialPivLu().solve(rhs);

    out.C.resize(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto& r = res[static_cast<std::size_t>(i)];
      const VectorXc g = exp_beta_fourier(beta, r.radius, K, -1);
      const double pref = -(r.wave_speed * r.wave_speed / r.area()) * 2.0 * pi * r.radius *
                          std::exp(-beta.dot(r.center));
      for (Eigen::Index j = 0; j < N; ++j) {
        cplx acc = 0.0;
        for (int n = -K; n <= K; ++n) acc += g(-n + K) * out.densities(i * block + n + K, j);
        out.C(i, j) = pref * acc;
      }
    }
    if (!out.C.allFinite()) fail(ErrorKind::NonFinite, "capacitance matrix has non-finite entries");
    return out;
  }

 private:
  SlpAssembler slp_;
  Tolerances tol_;
};

inline MatrixXc capacitance_2d(const std::vector<CircularResonator>& res, const Quasimomentum2D& q,
                               const Lattice2D& lat, int K, DualTruncation trunc, const Tolerances& tol = {}) {
  return CapacitanceSolver(res, q.alpha, lat, K, trunc, tol)(q.beta).C;
}

inline std::vector<SubwavelengthBand> bands_from_capacitance(const MatrixXc& C, double delta,
                                                             const Tolerances& tol = {}) {
  std::vector<SubwavelengthBand> out;
  int b = 0;
  for (const cplx lam : eigenvalues_sorted(C, tol)) out.push_back({lam, subwavelength_frequency(lam, delta), b++});
  return out;
}

inline std::vector<SubwavelengthBand> subwavelength_bands_2d(const std::vector<CircularResonator>& res,
                                                             const Quasimomentum2D& q, const Lattice2D& lat,
                                                             double delta, int K, DualTruncation trunc,
                                                             const Tolerances& tol = {}) {
  return bands_from_capacitance(capacitance_2d(res, q, lat, K, trunc, tol), delta, tol);
}

}  // namespace cbs::multipole2d
