#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cbs/error.hpp"

namespace cbs {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using Vec2 = Eigen::Vector2d;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Every tolerance used across the library lives here so a run can be
/// reproduced from one record.
struct Tolerances {
  double residual = 1e-10;          // eigenpair residual, relative to ||M||
  std::size_t max_eig_dim = 512;    // cap on dense eigenproblem size
  double real_eigenvalue = 1e-10;   // |Im lambda| <= tol * max(1, |lambda|) counts as real
  double rayleigh_guard = 1e-12;    // |denominator| / (|alpha+q|^2 + 1) below this is singular
  double slp_condition_cap = 1e12;  // condition number above which the SLP is treated as singular
  double root = 1e-9;               // |Im omega| accepted as a root of the gap equation
  double degenerate = 1e-12;        // eigenvalue separation flagged as degenerate
  double gap_beta = 1e-8;           // |beta| above which a transfer-matrix row is a gap row
};

// ---------------------------------------------------------------------------
// Quasimomenta and Brillouin zones

/// alpha + i beta. alpha lives in the real Brillouin zone, beta is the
/// evanescence vector: the Floquet factor over a lattice vector l is
/// e^{i alpha.l} e^{-beta.l}.
template <int Dim>
struct ComplexQuasimomentum {
  using Vec = Eigen::Matrix<double, Dim, 1>;
  Vec alpha = Vec::Zero();
  Vec beta = Vec::Zero();

  bool propagating() const { return beta.isZero(0.0); }
};

using Quasimomentum1D = ComplexQuasimomentum<1>;
using Quasimomentum2D = ComplexQuasimomentum<2>;

inline Quasimomentum1D make_quasimomentum(double alpha, double beta) {
  Quasimomentum1D q;
  q.alpha(0) = alpha;
  q.beta(0) = beta;
  return q;
}

inline Quasimomentum2D make_quasimomentum(const Vec2& alpha, const Vec2& beta) {
  Quasimomentum2D q;
  q.alpha = alpha;
  q.beta = beta;
  return q;
}

/// Reduces alpha into (-pi/L, pi/L]. Uses the exact IEEE remainder, so the
/// map is idempotent bit for bit.
inline double reduce_alpha(double alpha, double cell_length) {
  const double period = 2.0 * pi / cell_length;
  const double half = 0.5 * period;
  double r = std::remainder(alpha, period);
  if (r == -half) r = half;
  return r;
}

/// Reduction modulo the dual lattice spanned by the columns of `dual`, with
/// `direct` holding the lattice vectors (dual_i . direct_j = 2 pi delta_ij).
/// Integer shifts are only applied outside a 1e-12 band around the zone
/// boundary, which makes repeated application a no-op.
inline Vec2 reduce_alpha(const Vec2& alpha, const Eigen::Matrix2d& direct,
                         const Eigen::Matrix2d& dual) {
  constexpr double band = 1e-12;
  Vec2 out = alpha;
  for (int i = 0; i < 2; ++i) {
    const double c = alpha.dot(direct.col(i)) / (2.0 * pi);
    if (c > 0.5 + band || c <= -0.5 - band) {
      out -= std::ceil(c - 0.5) * dual.col(i);
    }
  }
  return out;
}

/// One labelled vertex of a Brillouin-zone path (Gamma, X, M, ...).
struct PathVertex {
  std::string label;
  Vec2 alpha;
};

struct PathSample {
  Vec2 alpha;
  double arc = 0.0;       // cumulative path length in reciprocal units
  std::size_t segment = 0;
  std::string label;      // vertex label, empty for interior samples
};

/// Piecewise-linear path through the Brillouin zone. Each segment is sampled
/// with `samples_per_segment` points including both end points; shared
/// vertices are emitted once.
class BrillouinPath {
 public:
  BrillouinPath(std::vector<PathVertex> vertices, std::size_t samples_per_segment)
      : vertices_(std::move(vertices)), samples_(samples_per_segment) {
    if (vertices_.size() < 2) fail(ErrorKind::InvalidArgument, "path needs at least two vertices");
    if (samples_ < 2) fail(ErrorKind::InvalidArgument, "samples_per_segment must be >= 2");
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
      if ((vertices_[i].alpha - vertices_[i - 1].alpha).norm() == 0.0) {
        fail(ErrorKind::InvalidArgument, "consecutive path vertices coincide: " + vertices_[i].label);
      }
    }
  }

  const std::vector<PathVertex>& vertices() const { return vertices_; }
  std::size_t samples_per_segment() const { return samples_; }

  std::vector<PathSample> sample() const {
    std::vector<PathSample> out;
    double arc = 0.0;
    for (std::size_t s = 0; s + 1 < vertices_.size(); ++s) {
      const Vec2& a = vertices_[s].alpha;
      const Vec2& b = vertices_[s + 1].alpha;
      const double len = (b - a).norm();
      for (std::size_t j = (s == 0 ? 0 : 1); j < samples_; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(samples_ - 1);
        PathSample p;
        p.alpha = (1.0 - t) * a + t * b;
        p.arc = arc + t * len;
        p.segment = s;
        if (j == 0) p.label = vertices_[s].label;
        if (j + 1 == samples_) p.label = vertices_[s + 1].label;
        out.push_back(std::move(p));
      }
      arc += len;
    }
    return out;
  }

  /// Gamma -> M -> X -> Gamma for a square lattice with period `L`.
  static BrillouinPath square_gmxg(double L, std::size_t samples_per_segment) {
    const double k = pi / L;
    return BrillouinPath({{"G", Vec2(0.0, 0.0)},
                          {"M", Vec2(k, k)},
                          {"X", Vec2(k, 0.0)},
                          {"G", Vec2(0.0, 0.0)}},
                         samples_per_segment);
  }

 private:
  std::vector<PathVertex> vertices_;
  std::size_t samples_;
};

// ---------------------------------------------------------------------------
// Frequencies

/// sqrt(delta * lambda) on the branch with non-negative imaginary part.
/// An imaginary part at round-off level (below 1e-12 |w|) counts as zero,
/// so a numerically real positive lambda maps to the non-negative root
/// whichever side of the axis the eigensolver left it on.
inline cplx subwavelength_frequency(cplx lambda, double delta) {
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  cplx w = std::sqrt(delta * lambda);
  if (w.imag() < 0.0 && std::abs(w.imag()) > 1e-12 * std::abs(w)) w = -w;
  return w;
}

struct SubwavelengthBand {
  cplx lambda;
  cplx omega;
  int branch_index = 0;
};

// ---------------------------------------------------------------------------
// Dense eigenproblems

struct EigenPair {
  cplx value;
  VectorXc vector;
};

/// All eigenpairs of a small dense complex matrix, sorted by real part and
/// then imaginary part, with unit-norm eigenvectors.
inline std::vector<EigenPair> eigs_complex(const MatrixXc& m, const Tolerances& tol = {}) {
  if (m.rows() != m.cols()) fail(ErrorKind::InvalidArgument, "matrix is not square");
  if (static_cast<std::size_t>(m.rows()) > tol.max_eig_dim) {
    fail(ErrorKind::InvalidArgument, "matrix dimension exceeds configured cap");
  }
  if (!m.allFinite()) fail(ErrorKind::NonFinite, "matrix has NaN or Inf entries");
  const Eigen::Index n = m.rows();
  std::vector<EigenPair> out;
  if (n == 0) return out;

  Eigen::ComplexEigenSolver<MatrixXc> solver(m, true);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::ConvergenceFailure, "complex Schur iteration did not converge");
  }
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    VectorXc v = solver.eigenvectors().col(i);
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    out.push_back({solver.eigenvalues()(i), std::move(v)});
  }
  std::sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return out;
}

inline std::vector<cplx> eigenvalues_sorted(const MatrixXc& m, const Tolerances& tol = {}) {
  if (m.rows() != m.cols()) fail(ErrorKind::InvalidArgument, "matrix is not square");
  if (!m.allFinite()) fail(ErrorKind::NonFinite, "matrix has NaN or Inf entries");
  if (static_cast<std::size_t>(m.rows()) > tol.max_eig_dim) {
    fail(ErrorKind::InvalidArgument, "matrix dimension exceeds configured cap");
  }
  std::vector<cplx> out;
  if (m.rows() == 0) return out;
  Eigen::ComplexEigenSolver<MatrixXc> solver(m, false);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::ConvergenceFailure, "complex Schur iteration did not converge");
  }
  out.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m.rows());
  std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

inline bool is_real(cplx z, double tol) {
  return std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z));
}

// ---------------------------------------------------------------------------
// Threading

/// Runs fn(i) for i in [0, n). Each index is handled exactly once, so
/// callers that write into slot i get input-ordered output for any thread
/// count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cbs
