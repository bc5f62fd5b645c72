#pragma once

#include <cmath>
#include <tuple>
#include <vector>

#include "cbs/chain1d.hpp"
#include "cbs/core.hpp"

namespace cbs::ssh1d {

/// Finite dimer chain with a geometric defect in the middle.
///
/// Left half: s1, s2, s1, s2, ... ending in s2 at the centre resonator.
/// Right half mirrors it: s2, s1, ... so the centre sits between two s2
/// spacings. Total resonators = 4m + 1 where m is the number of dimers on
/// each side.
class DefectedChain {
 public:
  DefectedChain(std::size_t resonators, double s1, double s2, double length = 1.0, double wave_speed = 1.0,
                double delta = 1e-3)
      : n_(resonators), s1_(s1), s2_(s2), length_(length), speed_(wave_speed), delta_(delta) {
    if (n_ < 5 || n_ % 4 != 1)
      fail(ErrorKind::InvalidGeometry, "resonator count must be 4m+1 with m >= 1, got " + std::to_string(n_));
    if (!(s1_ > 0.0) || !(s2_ > 0.0)) fail(ErrorKind::InvalidGeometry, "spacings must be positive");
    if (!(length_ > 0.0)) fail(ErrorKind::InvalidGeometry, "resonator length must be positive");
    if (!(speed_ > 0.0)) fail(ErrorKind::InvalidGeometry, "wave speed must be positive");
    if (!(delta_ > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  }

  std::size_t size() const { return n_; }
  std::size_t dimers_per_side() const { return (n_ - 1) / 4; }
  std::size_t interface_index() const { return (n_ - 1) / 2; }
  double s1() const { return s1_; }
  double s2() const { return s2_; }
  double length() const { return length_; }
  double wave_speed() const { return speed_; }
  double delta() const { return delta_; }

  /// Bulk cell length of the periodic dimer this chain is cut from.
  double cell_length() const { return 2.0 * length_ + s1_ + s2_; }

  std::vector<double> spacings() const {
    const std::size_t m = dimers_per_side();
    std::vector<double> s;
    s.reserve(n_ - 1);
    for (std::size_t j = 0; j < m; ++j) {
      s.push_back(s1_);
      s.push_back(s2_);
    }
    for (std::size_t j = 0; j < m; ++j) {
      s.push_back(s2_);
      s.push_back(s1_);
    }
    return s;
  }

 private:
  std::size_t n_;
  double s1_, s2_, length_, speed_, delta_;
};

/// Open-chain capacitance matrix for arbitrary spacings; end rows keep only
/// their single neighbour.
inline Eigen::MatrixXd finite_capacitance(const std::vector<double>& spacings) {
  const std::size_t n = spacings.size() + 1;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < spacings.size(); ++i) {
    if (!(spacings[i] > 0.0)) fail(ErrorKind::InvalidGeometry, "spacing must be positive");
    const double c = 1.0 / spacings[i];
    const auto a = static_cast<Eigen::Index>(i);
    C(a, a) += c;
    C(a + 1, a + 1) += c;
    C(a, a + 1) -= c;
    C(a + 1, a) -= c;
  }
  return C;
}

inline Eigen::MatrixXd finite_capacitance(const DefectedChain& chain) {
  return finite_capacitance(chain.spacings());
}

/// Weighted by v^2 / l. The weight is uniform here, so symmetry survives.
inline Eigen::MatrixXd generalized_finite_capacitance(const DefectedChain& chain) {
  return (chain.wave_speed() * chain.wave_speed() / chain.length()) * finite_capacitance(chain);
}

struct InterfaceMode {
  double omega = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd mode;        // unit norm, positive at the interface resonator
  double predicted_beta = 0.0;
  double fitted_beta = 0.0;    // mean of the two fitted |slopes| divided by L
  double gap_lo = 0.0;         // bulk gap in lambda
  double gap_hi = 0.0;
  std::size_t in_gap_count = 0;
};

/// Bulk gap at alpha = pi/L in weighted capacitance eigenvalues, taken from
/// the periodic dimer.
inline std::pair<double, double> bulk_gap(const DefectedChain& chain) {
  const chain1d::ChainGeometry1D dimer({chain.length(), chain.length()}, {chain.s1(), chain.s2()},
                                       {chain.wave_speed(), chain.wave_speed()});
  const double L = dimer.cell_length();
  const auto ev = eigenvalues_sorted(chain1d::generalized_capacitance_1d(dimer, make_quasimomentum(pi / L, 0.0)));
  return {ev[0].real(), ev[1].real()};
}

/// Decay rate of the alpha = pi/L gap branch through lambda = omega^2 / delta:
/// beta = arcosh((s1 s2 / 2)(1/s1^2 + 1/s2^2 - (lambda - 1/s1 - 1/s2)^2)) / L.
inline double predicted_decay_rate(double omega, double delta, double s1, double s2, double L) {
  if (!(delta > 0.0) || !(s1 > 0.0) || !(s2 > 0.0) || !(L > 0.0))
    fail(ErrorKind::InvalidArgument, "delta, s1, s2 and L must be positive");
  const double lambda = omega * omega / delta;
  const double shifted = lambda - 1.0 / s1 - 1.0 / s2;
  const double arg = 0.5 * s1 * s2 * (1.0 / (s1 * s1) + 1.0 / (s2 * s2) - shifted * shifted);
  if (arg < 1.0) {
    if (arg > 1.0 - 1e-14) return 0.0;
    fail(ErrorKind::OutOfGap, "frequency is not inside the bulk gap");
  }
  return std::acosh(arg) / L;
}

struct EnvelopeReport {
  double slope_left = 0.0;     // d log(amplitude) / d(cell), negative when decaying
  double slope_right = 0.0;
  double expected = 0.0;       // beta L
  double rel_error_left = 0.0;
  double rel_error_right = 0.0;
  double envelope_constant = 0.0;  // smallest A with |u| <= A e^{-beta L dist} on the fit cells
  double max_violation = 0.0;      // worst relative excess over that envelope on all other cells
  std::size_t fitted_cells = 0;    // per side
  std::vector<double> amplitude_left;   // per cell, index 0 = next to the interface
  std::vector<double> amplitude_right;
};

namespace detail {
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace detail

/// Log-linear fit of the per-cell amplitude (max over the two resonators of
/// a dimer) against the cell distance from the interface. `margin` cells are
/// dropped next to the interface and next to each end.
inline EnvelopeReport decay_envelope_check(const Eigen::VectorXd& mode, double beta, double L,
                                           std::size_t margin = 3) {
  const auto n = static_cast<std::size_t>(mode.size());
  if (n < 5 || n % 4 != 1) fail(ErrorKind::InvalidArgument, "mode length must be 4m+1");
  const std::size_t m = (n - 1) / 4;
  if (m < 2 * margin + 2) fail(ErrorKind::InvalidArgument, "chain too short for the requested margin");

  EnvelopeReport r;
  r.expected = beta * L;
  const std::size_t c = 2 * m;
  for (std::size_t d = 1; d <= m; ++d) {
    // Dimer d on the left covers resonators c-2d and c-2d+1.
    r.amplitude_left.push_back(std::max(std::abs(mode(c - 2 * d)), std::abs(mode(c - 2 * d + 1))));
    r.amplitude_right.push_back(std::max(std::abs(mode(c + 2 * d - 1)), std::abs(mode(c + 2 * d))));
  }

  std::vector<double> x, yl, yr;
  for (std::size_t d = margin + 1; d + margin <= m; ++d) {
    x.push_back(static_cast<double>(d));
    yl.push_back(std::log(r.amplitude_left[d - 1]));
    yr.push_back(std::log(r.amplitude_right[d - 1]));
  }
  r.fitted_cells = x.size();
  r.slope_left = detail::ls_slope(x, yl);
  r.slope_right = detail::ls_slope(x, yr);
  if (r.expected > 0.0) {
    r.rel_error_left = std::abs(std::abs(r.slope_left) - r.expected) / r.expected;
    r.rel_error_right = std::abs(std::abs(r.slope_right) - r.expected) / r.expected;
  }

  auto ratio = [&](std::size_t d, double amp) { return amp / std::exp(-r.expected * static_cast<double>(d)); };
  for (std::size_t d = margin + 1; d + margin <= m; ++d) {
    r.envelope_constant = std::max({r.envelope_constant, ratio(d, r.amplitude_left[d - 1]),
                                    ratio(d, r.amplitude_right[d - 1])});
  }
  for (std::size_t d = 1; d <= m; ++d) {
    if (d > margin && d + margin <= m) continue;
    for (double amp : {r.amplitude_left[d - 1], r.amplitude_right[d - 1]}) {
      r.max_violation = std::max(r.max_violation, ratio(d, amp) / r.envelope_constant - 1.0);
    }
  }
  return r;
}

/// The eigenpair of the finite chain lying inside the bulk gap. If several
/// do, the one closest to mid-gap wins and `in_gap_count` says so.
inline InterfaceMode interface_eigenpair(const DefectedChain& chain, std::size_t margin = 3) {
  if (chain.s1() == chain.s2()) fail(ErrorKind::NoGapMode, "equal spacings close the bulk gap");
  InterfaceMode out;
  std::tie(out.gap_lo, out.gap_hi) = bulk_gap(chain);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(generalized_finite_capacitance(chain));
  if (solver.info() != Eigen::Success) fail(ErrorKind::ConvergenceFailure, "symmetric eigensolver failed");
  const double mid = 0.5 * (out.gap_lo + out.gap_hi);
  Eigen::Index pick = -1;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double lam = solver.eigenvalues()(i);
    if (lam > out.gap_lo && lam < out.gap_hi) {
      ++out.in_gap_count;
      if (pick < 0 || std::abs(lam - mid) < std::abs(solver.eigenvalues()(pick) - mid)) pick = i;
    }
  }
  if (pick < 0) fail(ErrorKind::NoGapMode, "no eigenvalue inside the bulk gap");

  out.lambda = solver.eigenvalues()(pick);
  out.omega = std::sqrt(chain.delta() * out.lambda);
  out.mode = solver.eigenvectors().col(pick).normalized();
  if (out.mode(static_cast<Eigen::Index>(chain.interface_index())) < 0.0) out.mode = -out.mode;

  // The closed-form inversion assumes unit weights; undo the v^2/l scaling.
  const double w = chain.wave_speed() * chain.wave_speed() / chain.length();
  const double L = chain.cell_length();
  out.predicted_beta = predicted_decay_rate(out.omega, chain.delta() * w, chain.s1(), chain.s2(), L);
  if (chain.dimers_per_side() >= 2 * margin + 2) {
    const auto env = decay_envelope_check(out.mode, out.predicted_beta, L, margin);
    out.fitted_beta = 0.5 * (std::abs(env.slope_left) + std::abs(env.slope_right)) / L;
  }
  return out;
}

/// lambda of the interface mode in the infinite chain, (3/s1 + 3/s2 - sqrt(9/s1^2 - 14/(s1 s2) + 9/s2^2)) / 2.
inline double interface_lambda_closed_form(double s1, double s2) {
  return 0.5 * (3.0 / s1 + 3.0 / s2 - std::sqrt(9.0 / (s1 * s1) - 14.0 / (s1 * s2) + 9.0 / (s2 * s2)));
}

}  // namespace cbs::ssh1d
