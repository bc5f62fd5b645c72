#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cbs/core.hpp"

namespace cbs::chain1d {

/// Unit cell of a periodic chain: N resonators of length `lengths[i]`,
/// spacing `spacings[i]` between resonator i and i+1 (the last one wraps
/// to the first resonator of the next cell), interior wave speeds.
class ChainGeometry1D {
 public:
  ChainGeometry1D(std::vector<double> lengths, std::vector<double> spacings,
                  std::vector<double> wave_speeds)
      : lengths_(std::move(lengths)), spacings_(std::move(spacings)), speeds_(std::move(wave_speeds)) {
    const std::size_t n = lengths_.size();
    if (n == 0) fail(ErrorKind::InvalidGeometry, "chain needs at least one resonator");
    if (spacings_.size() != n) fail(ErrorKind::InvalidGeometry, "need one spacing per resonator");
    if (speeds_.size() != n) fail(ErrorKind::InvalidGeometry, "need one wave speed per resonator");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(lengths_[i] > 0.0) || !std::isfinite(lengths_[i]))
        fail(ErrorKind::InvalidGeometry, "resonator length must be positive (index " + std::to_string(i) + ")");
      if (!(spacings_[i] > 0.0) || !std::isfinite(spacings_[i]))
        fail(ErrorKind::InvalidGeometry, "spacing must be positive (index " + std::to_string(i) + ")");
      if (!(speeds_[i] > 0.0) || !std::isfinite(speeds_[i]))
        fail(ErrorKind::InvalidGeometry, "wave speed must be positive (index " + std::to_string(i) + ")");
    }
  }

  /// Unit lengths and wave speeds, the setting of the closed forms.
  static ChainGeometry1D uniform(std::vector<double> spacings) {
    const std::size_t n = spacings.size();
    return ChainGeometry1D(std::vector<double>(n, 1.0), std::move(spacings), std::vector<double>(n, 1.0));
  }

  std::size_t size() const { return lengths_.size(); }
  const std::vector<double>& lengths() const { return lengths_; }
  const std::vector<double>& spacings() const { return spacings_; }
  const std::vector<double>& wave_speeds() const { return speeds_; }

  double cell_length() const {
    double L = 0.0;
    for (double l : lengths_) L += l;
    for (double s : spacings_) L += s;
    return L;
  }

 private:
  std::vector<double> lengths_;
  std::vector<double> spacings_;
  std::vector<double> speeds_;
};

/// Quasiperiodic capacitance matrix for complex quasimomentum alpha + i beta.
///
/// For N >= 2 the corner terms are -e^{-i(alpha+i beta)L}/s_N at (1,N) and
/// -e^{+i(alpha+i beta)L}/s_N at (N,1). The single-resonator entry is the
/// scalar (2/s)(1 - cos(aL)cosh(bL) - i sin(aL)sinh(bL)).
inline MatrixXc capacitance_matrix_1d(const ChainGeometry1D& geom, const Quasimomentum1D& q) {
  const std::size_t n = geom.size();
  const auto& s = geom.spacings();
  const double L = geom.cell_length();
  const double a = q.alpha(0);
  const double b = q.beta(0);
  MatrixXc C = MatrixXc::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  if (n == 1) {
    const double aL = a * L;
    const double bL = b * L;
    C(0, 0) = (2.0 / s[0]) * cplx(1.0 - std::cos(aL) * std::cosh(bL), -std::sin(aL) * std::sinh(bL));
    return C;
  }

  const cplx k(a, b);
  const cplx forward = std::exp(I * k * L);   // e^{i(alpha + i beta)L}
  const cplx backward = std::exp(-I * k * L);
  for (std::size_t j = 0; j < n; ++j) {
    const double s_left = s[(j + n - 1) % n];
    const double s_right = s[j];
    const auto jj = static_cast<Eigen::Index>(j);
    C(jj, jj) = 1.0 / s_left + 1.0 / s_right;
    if (j + 1 < n) {
      C(jj, jj + 1) -= 1.0 / s_right;
      C(jj + 1, jj) -= 1.0 / s_right;
    }
  }
  const auto last = static_cast<Eigen::Index>(n - 1);
  C(0, last) -= backward / s[n - 1];
  C(last, 0) -= forward / s[n - 1];
  return C;
}

/// W C with W = diag(v_i^2 / l_i).
inline MatrixXc generalized_capacitance_1d(const ChainGeometry1D& geom, const Quasimomentum1D& q) {
  MatrixXc C = capacitance_matrix_1d(geom, q);
  for (std::size_t i = 0; i < geom.size(); ++i) {
    const double w = geom.wave_speeds()[i] * geom.wave_speeds()[i] / geom.lengths()[i];
    C.row(static_cast<Eigen::Index>(i)) *= w;
  }
  return C;
}

// ---------------------------------------------------------------------------
// Dimer closed forms

enum class DimerBranch {
  Omega1,  // alpha = pi/L, lower sign, finite beta interval
  Omega2,  // alpha = pi/L, upper sign, finite beta interval
  Omega3,  // alpha = 0, upper sign, every beta
  Omega4,  // alpha = 0, lower sign, imaginary for beta != 0
};

inline std::string to_string(DimerBranch b) {
  switch (b) {
    case DimerBranch::Omega1: return "omega1";
    case DimerBranch::Omega2: return "omega2";
    case DimerBranch::Omega3: return "omega3";
    case DimerBranch::Omega4: return "omega4";
  }
  return "?";
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool unbounded = false;
  bool empty = false;

  bool contains(double x) const {
    if (empty) return false;
    if (unbounded) return true;
    return x >= lo && x <= hi;
  }
};

/// Admissible beta for the alpha = pi/L gap branches:
/// |beta| <= arcosh((s1^2 + s2^2) / (2 s1 s2)) / L.
inline Interval beta_admissible_interval(double s1, double s2, double L) {
  if (!(s1 > 0.0) || !(s2 > 0.0) || !(L > 0.0))
    fail(ErrorKind::InvalidGeometry, "s1, s2 and L must be positive");
  const double arg = (s1 * s1 + s2 * s2) / (2.0 * s1 * s2);
  const double beta_max = std::acosh(std::max(1.0, arg)) / L;
  return {-beta_max, beta_max, false, false};
}

struct GapBranch1D {
  DimerBranch branch;
  double alpha_pin;  // 0 or pi/L
  Interval beta_domain;
};

inline GapBranch1D dimer_branch_info(DimerBranch branch, double s1, double s2, double L) {
  switch (branch) {
    case DimerBranch::Omega1:
    case DimerBranch::Omega2:
      return {branch, pi / L, beta_admissible_interval(s1, s2, L)};
    case DimerBranch::Omega3:
      return {branch, 0.0, Interval{0.0, 0.0, true, false}};
    case DimerBranch::Omega4:
      return {branch, 0.0, Interval{0.0, 0.0, false, false}};
  }
  return {branch, 0.0, Interval{0.0, 0.0, false, true}};
}

/// Capacitance eigenvalue lambda(beta) on a dimer gap branch (unit lengths
/// and wave speeds).
inline double dimer_gap_lambda(double s1, double s2, double L, DimerBranch branch, double beta) {
  if (!(s1 > 0.0) || !(s2 > 0.0) || !(L > 0.0))
    fail(ErrorKind::InvalidGeometry, "s1, s2 and L must be positive");
  const double base = 1.0 / s1 + 1.0 / s2;
  const double sq = 1.0 / (s1 * s1) + 1.0 / (s2 * s2);
  const double cross = 2.0 / (s1 * s2) * std::cosh(beta * L);
  double inner = 0.0;
  double sign = 1.0;
  switch (branch) {
    case DimerBranch::Omega1: inner = sq - cross; sign = -1.0; break;
    case DimerBranch::Omega2: inner = sq - cross; sign = +1.0; break;
    case DimerBranch::Omega3: inner = sq + cross; sign = +1.0; break;
    case DimerBranch::Omega4:
      if (beta != 0.0) fail(ErrorKind::EmptyBranch, "omega4 is imaginary for every beta != 0");
      inner = sq + cross;
      sign = -1.0;
      break;
  }
  if (inner < 0.0) {
    // Allow round-off at the interval end points.
    if (inner > -1e-14 * sq) {
      inner = 0.0;
    } else {
      fail(ErrorKind::OutOfDomain, "beta outside the admissible interval of " + to_string(branch));
    }
  }
  return base + sign * std::sqrt(inner);
}

inline double dimer_gap_branches(double s1, double s2, double L, double delta, DimerBranch branch,
                                 double beta) {
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  const double lambda = dimer_gap_lambda(s1, s2, L, branch, beta);
  if (lambda < 0.0) fail(ErrorKind::OutOfDomain, "branch value is imaginary");
  return std::sqrt(delta * lambda);
}

// ---------------------------------------------------------------------------
// Sweeps

/// Linear segment in (alpha, beta) space, sampled inclusively.
struct Segment1D {
  double alpha_start = 0.0;
  double alpha_end = 0.0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::size_t samples = 2;
  std::string label;
};

struct BandRow1D {
  double alpha;
  double beta;
  int branch;
  double omega;
  std::string segment;
};

struct BandTable1D {
  std::vector<BandRow1D> rows;
  std::size_t omitted = 0;  // samples whose frequency is not real
};

/// Frequencies sqrt(delta lambda_i) over each segment, keeping only real
/// ones. Gap segments (beta != 0) must pin alpha to 0 or pi/L.
inline BandTable1D band_sweep_1d(const ChainGeometry1D& geom, const std::vector<Segment1D>& path,
                                 double delta, const Tolerances& tol = {}, unsigned threads = 1) {
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  const double L = geom.cell_length();
  struct Point {
    double alpha, beta;
    const Segment1D* seg;
  };
  std::vector<Point> points;
  for (const auto& seg : path) {
    if (seg.samples < 1) fail(ErrorKind::InvalidArgument, "segment needs at least one sample");
    const bool gap = seg.beta_start != 0.0 || seg.beta_end != 0.0;
    if (gap) {
      for (double a : {seg.alpha_start, seg.alpha_end}) {
        const double aL = std::abs(reduce_alpha(a, L) * L);
        if (!(aL < 1e-12 || std::abs(aL - pi) < 1e-12))
          fail(ErrorKind::InvalidArgument, "gap segments must pin alpha to 0 or pi/L");
      }
    }
    for (std::size_t j = 0; j < seg.samples; ++j) {
      const double t = seg.samples == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(seg.samples - 1);
      points.push_back({(1 - t) * seg.alpha_start + t * seg.alpha_end,
                        (1 - t) * seg.beta_start + t * seg.beta_end, &seg});
    }
  }

  std::vector<std::vector<cplx>> eig(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    eig[i] = eigenvalues_sorted(
        generalized_capacitance_1d(geom, make_quasimomentum(points[i].alpha, points[i].beta)), tol);
  });

  BandTable1D table;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t b = 0; b < eig[i].size(); ++b) {
      const cplx lam = eig[i][b];
      if (!is_real(lam, tol.real_eigenvalue) || lam.real() < -tol.real_eigenvalue) {
        ++table.omitted;
        continue;
      }
      table.rows.push_back({points[i].alpha, points[i].beta, static_cast<int>(b),
                            std::sqrt(delta * std::max(0.0, lam.real())), points[i].seg->label});
    }
  }
  return table;
}

/// Bulk band over the Brillouin zone plus gap segments at alpha = 0 and
/// alpha = pi/L for |beta| <= beta_extent.
inline std::vector<Segment1D> standard_path_1d(double L, std::size_t samples, double beta_extent) {
  const double edge = pi / L;
  return {
      {-edge, edge, 0.0, 0.0, samples, "band"},
      {edge, edge, -beta_extent, beta_extent, samples, "gap_edge"},
      {0.0, 0.0, -beta_extent, beta_extent, samples, "gap_center"},
  };
}

}  // namespace cbs::chain1d
