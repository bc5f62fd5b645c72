#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "cbs/core.hpp"

namespace cbs::transfer1d {

using Matrix2c = Eigen::Matrix2cd;

/// Plane-wave amplitude map (A, B) -> (C, D) across one resonator occupying
/// [-a, a]. Outside: k = omega/v; inside: k' = n k; the flux across each
/// interface carries the contrast delta.
struct TransferMatrix {
  Matrix2c entries;
  double k = 0.0;
  double a = 0.0;
  double n = 1.0;
  double delta = 1.0;
};

inline TransferMatrix transfer_matrix_single(double k, double a, double n, double delta) {
  if (!(k >= 0.0)) fail(ErrorKind::InvalidArgument, "k must be non-negative");
  if (!(a > 0.0) || !(n > 0.0) || !(delta > 0.0))
    fail(ErrorKind::InvalidArgument, "a, n and delta must be positive");
  const double phase = 2.0 * a * k * n;
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  const double denom = 2.0 * delta * n;
  const double mix = (delta - n) * (delta + n) * s / denom;
  TransferMatrix t;
  t.k = k;
  t.a = a;
  t.n = n;
  t.delta = delta;
  t.entries(0, 0) = std::exp(-2.0 * I * a * k) * cplx(2.0 * delta * n * c, (delta * delta + n * n) * s) / denom;
  t.entries(0, 1) = cplx(0.0, -mix);
  t.entries(1, 0) = cplx(0.0, mix);
  t.entries(1, 1) = std::exp(2.0 * I * a * k) * cplx(2.0 * delta * n * c, -(delta * delta + n * n) * s) / denom;
  return t;
}

/// T(k) = diag(e^{ikL}, e^{-ikL}) M. Its eigenvalues are the Floquet
/// multipliers e^{i(alpha + i beta)L}.
inline Matrix2c modified_transfer(const TransferMatrix& m, double L) {
  if (!(L >= 2.0 * m.a)) fail(ErrorKind::InvalidArgument, "cell shorter than the resonator");
  Matrix2c T = m.entries;
  T.row(0) *= std::exp(I * m.k * L);
  T.row(1) *= std::exp(-I * m.k * L);
  return T;
}

inline std::array<cplx, 2> eigenvalues_2x2(const Matrix2c& T) {
  const cplx half_trace = 0.5 * (T(0, 0) + T(1, 1));
  const cplx det = T(0, 0) * T(1, 1) - T(0, 1) * T(1, 0);
  const cplx disc = std::sqrt(half_trace * half_trace - det);
  // Pick the numerically stable root first, recover the other from det.
  cplx l1 = (std::abs(half_trace + disc) >= std::abs(half_trace - disc)) ? half_trace + disc : half_trace - disc;
  cplx l2 = (std::abs(l1) > 0.0) ? det / l1 : half_trace - disc;
  return {l1, l2};
}

struct FloquetPair {
  double alpha = 0.0;
  double beta = 0.0;
  cplx multiplier;
};

struct FloquetExtraction {
  std::array<FloquetPair, 2> pairs;
  bool degenerate = false;
};

/// alpha = arg(lambda)/L reduced to (-pi/L, pi/L], beta = -log|lambda|/L for
/// both eigenvalues of T.
inline FloquetExtraction complex_quasimomentum_from_T(const Matrix2c& T, double L,
                                                      const Tolerances& tol = {}) {
  const auto lam = eigenvalues_2x2(T);
  FloquetExtraction out;
  for (int i = 0; i < 2; ++i) {
    out.pairs[i].multiplier = lam[i];
    out.pairs[i].alpha = reduce_alpha(std::arg(lam[i]) / L, L);
    out.pairs[i].beta = -std::log(std::abs(lam[i])) / L;
  }
  out.degenerate = std::abs(lam[0] - lam[1]) < tol.degenerate;
  return out;
}

struct SweepRow {
  double k;
  int branch;
  double alpha;
  double beta;
  bool gap;
  cplx multiplier;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::size_t degenerate = 0;
};

/// Two rows per k (one per Floquet multiplier). Multipliers are matched to
/// branches by nearest distance to the previous k.
inline SweepTable general_band_sweep(const std::vector<double>& k_grid, double a, double n, double delta,
                                     double L, const Tolerances& tol = {}, unsigned threads = 1) {
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (!(k_grid[i] > 0.0)) fail(ErrorKind::InvalidArgument, "k grid must be positive");
    if (i > 0 && !(k_grid[i] > k_grid[i - 1]))
      fail(ErrorKind::InvalidArgument, "k grid must be strictly increasing");
  }
  std::vector<FloquetExtraction> ext(k_grid.size());
  parallel_for(k_grid.size(), threads, [&](std::size_t i) {
    ext[i] = complex_quasimomentum_from_T(modified_transfer(transfer_matrix_single(k_grid[i], a, n, delta), L), L, tol);
  });

  SweepTable table;
  std::array<cplx, 2> prev{};
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    auto pairs = ext[i].pairs;
    if (i > 0) {
      const double keep = std::abs(pairs[0].multiplier - prev[0]) + std::abs(pairs[1].multiplier - prev[1]);
      const double swap = std::abs(pairs[1].multiplier - prev[0]) + std::abs(pairs[0].multiplier - prev[1]);
      if (swap < keep) std::swap(pairs[0], pairs[1]);
    }
    if (ext[i].degenerate) ++table.degenerate;
    for (int b = 0; b < 2; ++b) {
      const auto& p = pairs[b];
      table.rows.push_back({k_grid[i], b, p.alpha, p.beta, std::abs(p.beta) > tol.gap_beta, p.multiplier});
      prev[b] = p.multiplier;
    }
  }
  return table;
}

}  // namespace cbs::transfer1d
