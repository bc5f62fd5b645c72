#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbs/core.hpp"
#include "cbs/lattice2d.hpp"
#include "cbs/multipole2d.hpp"

namespace cbs::bands2d {

using lattice2d::DualTruncation;
using lattice2d::Lattice2D;
using multipole2d::CircularResonator;

// ---------------------------------------------------------------------------
// Muller's method on a real variable

struct MullerConfig {
  double tol = 1e-9;      // accept when |f| < tol
  int max_iter = 100;
  double min_step = 1e-15;
};

struct MullerResult {
  double root = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Three-point quadratic interpolation. When the local parabola has no real
/// root the iterate moves to its vertex, which keeps everything real and
/// handles even-multiplicity roots.
template <class F>
MullerResult muller_root(F&& f, double x0, double x1, double x2, const MullerConfig& cfg = {}) {
  if (x0 == x1 || x1 == x2 || x0 == x2) fail(ErrorKind::InvalidArgument, "Muller seeds must be distinct");
  double f0 = f(x0), f1 = f(x1), f2 = f(x2);
  if (!std::isfinite(f0) || !std::isfinite(f1) || !std::isfinite(f2))
    fail(ErrorKind::NonFinite, "function is not finite at a seed");
  MullerResult r;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    if (std::abs(f2) < cfg.tol) {
      r.root = x2;
      r.residual = std::abs(f2);
      r.iterations = it - 1;
      return r;
    }
    const double h1 = x1 - x0, h2 = x2 - x1;
    const double d1 = (f1 - f0) / h1, d2 = (f2 - f1) / h2;
    const double a = (d2 - d1) / (h2 + h1);
    const double b = a * h2 + d2;
    const double c = f2;
    const double disc = b * b - 4.0 * a * c;
    double step;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double den = std::abs(b + sq) >= std::abs(b - sq) ? b + sq : b - sq;
      step = den != 0.0 ? -2.0 * c / den : (a != 0.0 ? -b / (2.0 * a) : 0.0);
    } else {
      step = -b / (2.0 * a);
    }
    if (!std::isfinite(step)) fail(ErrorKind::NoConvergence, "Muller step is not finite");
    const double x3 = x2 + step;
    const double f3 = f(x3);
    if (!std::isfinite(f3)) fail(ErrorKind::NonFinite, "function is not finite at an iterate");
    if (std::abs(step) < cfg.min_step * std::max(1.0, std::abs(x2))) {
      if (std::abs(f3) < cfg.tol) return {x3, std::abs(f3), it};
      fail(ErrorKind::Stagnation, "Muller step below floor with residual " + std::to_string(std::abs(f3)));
    }
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = f2;
    x2 = x3;
    f2 = f3;
  }
  if (std::abs(f2) < cfg.tol) return {x2, std::abs(f2), cfg.max_iter};
  fail(ErrorKind::NoConvergence, "Muller iteration cap reached");
}

// ---------------------------------------------------------------------------
// Gap sweeps

struct SweepConfig {
  int K = 5;
  DualTruncation trunc{10};
  double delta = 1e-3;
  std::size_t t_samples = 160;      // coarse grid per alpha sample
  double t_max = 0.0;               // 0: up to the first Rayleigh value (or t_fallback)
  double t_fallback = 10.0;
  double rayleigh_margin = 1e-3;    // stop this far (relative) short of a Rayleigh value
  double max_omega_step = 0.005;    // refine pinned runs until neighbours are this close in omega
  int max_refine_depth = 8;
  double gamma_offset = 1e-3;       // |alpha| nudge, in units of |a1|, at Gamma with beta = 0
  MullerConfig muller{};
  Tolerances tol{};
  unsigned threads = 1;
};

enum class RowKind { Bulk, Pinned, Root, Zero };

inline std::string to_string(RowKind k) {
  switch (k) {
    case RowKind::Bulk: return "bulk";
    case RowKind::Pinned: return "pinned";
    case RowKind::Root: return "root";
    case RowKind::Zero: return "zero";
  }
  return "?";
}

struct GapRow {
  std::size_t sample = 0;  // index into the alpha path samples
  double arc = 0.0;
  Vec2 alpha = Vec2::Zero();
  double t = 0.0;          // |beta|, beta = t * beta_dir
  int band = 0;            // eigenvalue index, ascending real part
  cplx lambda;
  double omega = 0.0;
  RowKind kind = RowKind::Bulk;
  int branch = -1;
};

struct SampleFailure {
  std::size_t sample;
  double t;
  std::string error;
};

struct GapSweepResult {
  std::vector<GapRow> rows;
  std::vector<SampleFailure> failures;
  int branches = 0;
};

namespace detail {

inline double root_function(cplx lambda, double delta) {
  // Principal branch: the sign of Im follows Im lambda when Re lambda > 0.
  return std::sqrt(delta * lambda).imag();
}

inline std::size_t nearest(const std::vector<cplx>& v, cplx z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i] - z) < std::abs(v[best] - z)) best = i;
  return best;
}

struct Eval {
  bool ok = false;
  std::vector<cplx> lambda;
  std::string error;
};

}  // namespace detail

/// End of the t range for one alpha: just short of the first Rayleigh value
/// along beta_dir, or a fixed fallback when there is none.
inline double t_limit(const Vec2& alpha, const Vec2& beta_dir, const Lattice2D& lat, const SweepConfig& cfg) {
  if (cfg.t_max > 0.0) return cfg.t_max;
  const auto r = lattice2d::rayleigh_values(
      lattice2d::rayleigh_singularities(alpha, 0.0, beta_dir, lat, 4.0 * cfg.t_fallback + 4.0 * pi));
  for (double v : r) {
    if (v > 1e-9) return std::min(v * (1.0 - cfg.rayleigh_margin), cfg.t_fallback);
  }
  return cfg.t_fallback;
}

/// Roots of Im omega(alpha, t beta_dir) = 0 for t in [0, t_limit] at each
/// path sample, plus the bulk (t = 0) rows, plus zero-frequency crossings.
inline GapSweepResult gap_sweep_2d(const std::vector<CircularResonator>& res, const Lattice2D& lat,
                                   const std::vector<PathSample>& path, const Vec2& beta_dir_in,
                                   const SweepConfig& cfg = {}) {
  if (std::abs(beta_dir_in.norm() - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "beta_dir must be a unit vector");
  if (cfg.t_samples < 3) fail(ErrorKind::InvalidArgument, "need at least three t samples");
  if (!(cfg.delta > 0.0)) fail(ErrorKind::InvalidArgument, "delta must be positive");
  multipole2d::validate_resonators(res, lat);
  const Vec2 beta_dir = beta_dir_in;
  const double delta = cfg.delta;
  const double real_tol = cfg.muller.tol;

  std::vector<GapSweepResult> per(path.size());
  parallel_for(path.size(), cfg.threads, [&](std::size_t s) {
    GapSweepResult& out = per[s];
    const Vec2 alpha = path[s].alpha;
    const bool gamma = lat.reduce(alpha).norm() < 1e-12;

    std::optional<multipole2d::CapacitanceSolver> solver;
    try {
      solver.emplace(res, alpha, lat, cfg.K, cfg.trunc, cfg.tol);
    } catch (const NumericalError& e) {
      out.failures.push_back({s, 0.0, std::string(e.name())});
      return;
    }
    auto eval = [&](double t) {
      detail::Eval e;
      try {
        e.lambda = eigenvalues_sorted((*solver)(t * beta_dir).C, cfg.tol);
        e.ok = true;
      } catch (const NumericalError& err) {
        e.error = std::string(err.name());
      }
      return e;
    };
    auto emit = [&](double t, int band, cplx lam, RowKind kind) {
      GapRow row;
      row.sample = s;
      row.arc = path[s].arc;
      row.alpha = alpha;
      row.t = t;
      row.band = band;
      row.lambda = lam;
      row.omega = kind == RowKind::Zero ? 0.0 : std::abs(subwavelength_frequency(lam, delta).real());
      row.kind = kind;
      out.rows.push_back(row);
    };
    auto is_real_positive = [&](cplx lam) {
      return lam.real() > 0.0 && std::abs(subwavelength_frequency(lam, delta).imag()) < real_tol;
    };

    // Bulk row. Gamma is singular at beta = 0, so it is approached along the path.
    {
      std::vector<cplx> bulk;
      std::string err;
      try {
        if (gamma) {
          const Vec2 next = path[s + 1 < path.size() ? s + 1 : (s > 0 ? s - 1 : s)].alpha - alpha;
          const Vec2 dir = next.norm() > 0.0 ? Vec2(next.normalized()) : Vec2(1.0, 0.0);
          const Vec2 a = alpha + cfg.gamma_offset * lat.a1().norm() * dir;
          bulk = eigenvalues_sorted(
              multipole2d::capacitance_2d(res, make_quasimomentum(a, Vec2::Zero()), lat, cfg.K, cfg.trunc, cfg.tol),
              cfg.tol);
        } else {
          bulk = eigenvalues_sorted((*solver)(Vec2::Zero()).C, cfg.tol);
        }
      } catch (const NumericalError& e) {
        err = std::string(e.name());
      }
      if (!err.empty()) {
        out.failures.push_back({s, 0.0, err});
      } else {
        for (std::size_t b = 0; b < bulk.size(); ++b) {
          if (bulk[b].real() >= 0.0 && is_real(bulk[b], 1e-8)) emit(0.0, static_cast<int>(b), bulk[b], RowKind::Bulk);
        }
      }
    }

    // Coarse grid on (0, t_end].
    const double t_end = t_limit(alpha, beta_dir, lat, cfg);
    std::vector<double> ts;
    std::vector<detail::Eval> ev;
    for (std::size_t j = 1; j <= cfg.t_samples; ++j) {
      const double t = t_end * static_cast<double>(j) / static_cast<double>(cfg.t_samples);
      ts.push_back(t);
      ev.push_back(eval(t));
      if (!ev.back().ok) out.failures.push_back({s, t, ev.back().error});
    }

    // Pinned runs: emit real samples and refine between neighbours until the
    // frequency steps are small.
    std::function<void(double, cplx, double, cplx, int, int)> refine_run =
        [&](double ta, cplx la, double tb, cplx lb, int band, int depth) {
          const double wa = subwavelength_frequency(la, delta).real();
          const double wb = subwavelength_frequency(lb, delta).real();
          if (std::abs(wb - wa) <= cfg.max_omega_step || depth >= cfg.max_refine_depth) return;
          const double tm = 0.5 * (ta + tb);
          const auto e = eval(tm);
          if (!e.ok || static_cast<std::size_t>(band) >= e.lambda.size()) return;
          const cplx lm = e.lambda[static_cast<std::size_t>(band)];
          if (!is_real_positive(lm)) return;
          refine_run(ta, la, tm, lm, band, depth + 1);
          emit(tm, band, lm, RowKind::Pinned);
          refine_run(tm, lm, tb, lb, band, depth + 1);
        };

    const std::size_t nb = res.size();
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t j = 0; j < ts.size(); ++j) {
        if (!ev[j].ok) continue;
        const cplx lj = ev[j].lambda[b];
        if (is_real_positive(lj)) {
          emit(ts[j], static_cast<int>(b), lj, RowKind::Pinned);
          if (j + 1 < ts.size() && ev[j + 1].ok && is_real_positive(ev[j + 1].lambda[b]))
            refine_run(ts[j], lj, ts[j + 1], ev[j + 1].lambda[b], static_cast<int>(b), 0);
        }
      }
    }

    // Isolated roots from sign changes of Im sqrt(delta lambda_b).
    for (std::size_t b = 0; b < nb; ++b) {
      auto g = [&](double t) {
        const auto e = eval(t);
        if (!e.ok) return std::numeric_limits<double>::quiet_NaN();
        return detail::root_function(e.lambda[b], delta);
      };
      for (std::size_t j = 0; j + 1 < ts.size(); ++j) {
        if (!ev[j].ok || !ev[j + 1].ok) continue;
        const cplx la = ev[j].lambda[b], lb = ev[j + 1].lambda[b];
        if (is_real_positive(la) || is_real_positive(lb)) continue;  // handled as a pinned run
        if (la.real() <= 0.0 || lb.real() <= 0.0) continue;          // crossing the cut, not a root
        // Follow the eigenvalue by continuity: a conjugate pair can swap
        // places in the sorted order, which flips the sign without a root.
        if (detail::nearest(ev[j + 1].lambda, la) != b) continue;
        const double ga = detail::root_function(la, delta), gb = detail::root_function(lb, delta);
        if ((ga > 0.0) == (gb > 0.0)) continue;
        double lo = ts[j], hi = ts[j + 1];
        double root = std::numeric_limits<double>::quiet_NaN();
        try {
          const auto m = muller_root(g, lo, 0.5 * (lo + hi), hi, cfg.muller);
          if (m.root >= lo && m.root <= hi) root = m.root;
        } catch (const NumericalError&) {
        }
        if (std::isnan(root)) {
          // Bracketed fallback.
          double glo = ga;
          for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = g(mid);
            if (std::isnan(gm)) break;
            if (std::abs(gm) < cfg.muller.tol) {
              root = mid;
              break;
            }
            if ((gm > 0.0) == (glo > 0.0)) {
              lo = mid;
              glo = gm;
            } else {
              hi = mid;
            }
          }
        }
        if (std::isnan(root)) {
          out.failures.push_back({s, ts[j], "NoConvergence"});
          continue;
        }
        const auto e = eval(root);
        if (!e.ok) continue;
        const cplx lam = e.lambda[b];
        if (lam.real() > 0.0 && std::abs(detail::root_function(lam, delta)) < cfg.muller.tol)
          emit(root, static_cast<int>(b), lam, RowKind::Root);
      }
    }

    // Zero-frequency crossings: lambda real and changing sign without a pole.
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t j = 0; j + 1 < ts.size(); ++j) {
        if (!ev[j].ok || !ev[j + 1].ok) continue;
        const cplx la = ev[j].lambda[b], lb = ev[j + 1].lambda[b];
        if (!is_real(la, 1e-8) || !is_real(lb, 1e-8)) continue;
        if ((la.real() > 0.0) == (lb.real() > 0.0)) continue;
        double lo = ts[j], hi = ts[j + 1], flo = la.real();
        bool ok = true;
        for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          const auto e = eval(mid);
          if (!e.ok) {
            ok = false;
            break;
          }
          const double fm = e.lambda[b].real();
          if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        if (!ok) continue;
        const double tz = 0.5 * (lo + hi);
        const auto e = eval(tz);
        if (!e.ok) continue;
        const double scale = std::max(std::abs(la), std::abs(lb));
        // A pole flips sign with |lambda| growing; a zero with it shrinking.
        if (std::abs(e.lambda[b]) < 1e-3 * scale) emit(tz, static_cast<int>(b), e.lambda[b], RowKind::Zero);
      }
    }

    std::stable_sort(out.rows.begin(), out.rows.end(), [](const GapRow& a, const GapRow& b) {
      if (a.band != b.band) return a.band < b.band;
      return a.t < b.t;
    });
  });

  // Merge in path order, then continue branches.
  GapSweepResult all;
  for (auto& p : per) {
    for (auto& r : p.rows) all.rows.push_back(std::move(r));
    for (auto& f : p.failures) all.failures.push_back(std::move(f));
  }

  // Bulk rows: one branch per band. Pinned rows: one branch per (sample, band).
  // Isolated roots: nearest previous t on the same band, ties to smaller t.
  int next_id = static_cast<int>(res.size());
  for (auto& r : all.rows) {
    if (r.kind == RowKind::Bulk) r.branch = r.band;
  }
  struct Active {
    int id;
    int band;
    double t;
    std::size_t sample;
  };
  std::vector<Active> active;
  std::map<std::pair<std::size_t, int>, int> pinned_ids;
  std::size_t i = 0;
  while (i < all.rows.size()) {
    const std::size_t s = all.rows[i].sample;
    std::size_t j = i;
    while (j < all.rows.size() && all.rows[j].sample == s) ++j;
    std::vector<Active> next;
    std::vector<bool> used(active.size(), false);
    for (std::size_t k = i; k < j; ++k) {
      auto& r = all.rows[k];
      if (r.kind == RowKind::Pinned) {
        auto key = std::make_pair(s, r.band);
        auto it = pinned_ids.find(key);
        if (it == pinned_ids.end()) it = pinned_ids.emplace(key, next_id++).first;
        r.branch = it->second;
        continue;
      }
      if (r.kind != RowKind::Root && r.kind != RowKind::Zero) continue;
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < active.size(); ++a) {
        if (used[a] || active[a].band != r.band || active[a].sample + 1 != s) continue;
        const double d = std::abs(active[a].t - r.t);
        if (d < best_d || (d == best_d && best >= 0 && active[a].t < active[static_cast<std::size_t>(best)].t)) {
          best = static_cast<int>(a);
          best_d = d;
        }
      }
      if (best >= 0) {
        used[static_cast<std::size_t>(best)] = true;
        r.branch = active[static_cast<std::size_t>(best)].id;
      } else {
        r.branch = next_id++;
      }
      next.push_back({r.branch, r.band, r.t, s});
    }
    active = std::move(next);
    i = j;
  }
  all.branches = next_id;
  return all;
}

// ---------------------------------------------------------------------------
// Singularity scan

enum class SingularityKind { Peak, Pit, IllConditioned };

inline std::string to_string(SingularityKind k) {
  switch (k) {
    case SingularityKind::Peak: return "peak";
    case SingularityKind::Pit: return "pit";
    case SingularityKind::IllConditioned: return "ill_conditioned";
  }
  return "?";
}

struct ScanPoint {
  Vec2 beta;
  double lambda_abs = std::numeric_limits<double>::quiet_NaN();  // largest |lambda|
  double condition = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // empty when the capacitance was evaluated
};

struct SingularPoint {
  Vec2 beta;
  double t = 0.0;  // |beta|
  SingularityKind kind;
  double lambda_abs = 0.0;
  double nearest_rayleigh = 0.0;
  double rel_distance = 0.0;
};

struct ScanResult {
  std::vector<ScanPoint> grid;
  std::vector<SingularPoint> singular;
  std::vector<double> rayleigh;  // k = 0 predictions along the scanned line
};

struct ScanConfig {
  int K = 1;
  DualTruncation trunc{10};
  Tolerances tol{};
  unsigned threads = 1;
  double refine_tol = 1e-7;  // golden-section bracket width, relative
  double extremum_ratio = 100.0;  // refined |lambda| must beat the neighbours by this factor
};

/// |lambda| along beta = t * dir for the given t values; local maxima of
/// |lambda| (poles), local minima (zeros, typically at Rayleigh points) and
/// points where the SLP is singular are refined by golden section and
/// reported with the distance to the nearest k = 0 Rayleigh value.
inline ScanResult singularity_scan(const std::vector<CircularResonator>& res, const Vec2& alpha, const Vec2& dir_in,
                                   const std::vector<double>& t_grid, const Lattice2D& lat,
                                   const ScanConfig& cfg = {}) {
  if (std::abs(dir_in.norm() - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "direction must be a unit vector");
  if (t_grid.size() < 3) fail(ErrorKind::InvalidArgument, "scan needs at least three points");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) fail(ErrorKind::InvalidArgument, "scan grid must be increasing");
  const Vec2 dir = dir_in;
  multipole2d::CapacitanceSolver solver(res, alpha, lat, cfg.K, cfg.trunc, cfg.tol);
  Tolerances loose = cfg.tol;
  loose.slp_condition_cap = std::numeric_limits<double>::infinity();
  multipole2d::CapacitanceSolver unguarded(res, alpha, lat, cfg.K, cfg.trunc, loose);

  ScanResult out;
  out.grid.resize(t_grid.size());
  auto lam_abs = [&](double t, double* cond) {
    const auto r = unguarded(t * dir);
    if (cond) *cond = r.condition;
    double m = 0.0;
    for (const cplx l : eigenvalues_sorted(r.C, cfg.tol)) m = std::max(m, std::abs(l));
    return m;
  };
  parallel_for(t_grid.size(), cfg.threads, [&](std::size_t i) {
    auto& p = out.grid[i];
    p.beta = t_grid[i] * dir;
    try {
      p.lambda_abs = lam_abs(t_grid[i], &p.condition);
    } catch (const NumericalError& e) {
      p.error = std::string(e.name());
    }
  });

  const double tmax = t_grid.back();
  out.rayleigh = lattice2d::rayleigh_values(lattice2d::rayleigh_singularities(alpha, 0.0, dir, lat, 2.0 * tmax + 4.0 * pi));
  while (!out.rayleigh.empty() && out.rayleigh.back() > tmax) out.rayleigh.pop_back();

  auto golden = [&](double a, double b, bool maximize) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double t) {
      try {
        const double v = lam_abs(t, nullptr);
        return maximize ? -v : v;
      } catch (const NumericalError&) {
        return maximize ? -std::numeric_limits<double>::infinity() : 0.0;
      }
    };
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > cfg.refine_tol * std::max(1.0, std::abs(b))) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = f(d);
      }
    }
    return 0.5 * (a + b);
  };

  auto add = [&](double t, SingularityKind kind) {
    SingularPoint sp;
    sp.t = t;
    sp.beta = t * dir;
    sp.kind = kind;
    try {
      sp.lambda_abs = lam_abs(t, nullptr);
    } catch (const NumericalError&) {
      sp.lambda_abs = kind == SingularityKind::Pit ? 0.0 : std::numeric_limits<double>::infinity();
    }
    sp.nearest_rayleigh = std::numeric_limits<double>::quiet_NaN();
    double best = std::numeric_limits<double>::infinity();
    for (double r : out.rayleigh) {
      if (std::abs(r - t) < best) {
        best = std::abs(r - t);
        sp.nearest_rayleigh = r;
      }
    }
    sp.rel_distance = std::isfinite(best) ? best / sp.nearest_rayleigh : std::numeric_limits<double>::infinity();
    out.singular.push_back(sp);
  };

  const auto& g = out.grid;
  auto val = [&](std::size_t i) { return g[i].error.empty() ? g[i].lambda_abs : std::numeric_limits<double>::quiet_NaN(); };
  std::size_t i = 1;
  while (i + 1 < g.size()) {
    if (!g[i].error.empty() || g[i].condition > cfg.tol.slp_condition_cap) {
      // A run of points where the SLP blew up (Rayleigh term) or lost
      // invertibility; report the worst one.
      std::size_t j = i, worst = i;
      bool rayleigh = false;
      while (j + 1 < g.size() && (!g[j].error.empty() || g[j].condition > cfg.tol.slp_condition_cap)) {
        rayleigh = rayleigh || g[j].error == "RayleighSingular";
        if (!g[j].error.empty() || (g[worst].error.empty() && g[j].condition > g[worst].condition)) worst = j;
        ++j;
      }
      add(t_grid[worst], rayleigh ? SingularityKind::Pit : SingularityKind::IllConditioned);
      i = j;
      continue;
    }
    const double a = val(i - 1), b = val(i), c = val(i + 1);
    if (!std::isnan(a) && !std::isnan(c)) {
      if (b > a && b > c) {
        const double t = golden(t_grid[i - 1], t_grid[i + 1], true);
        double v = 0.0;
        try {
          v = lam_abs(t, nullptr);
        } catch (const NumericalError&) {
          v = std::numeric_limits<double>::infinity();
        }
        if (v > cfg.extremum_ratio * std::max(a, c)) add(t, SingularityKind::Peak);
      } else if (b < a && b < c) {
        const double t = golden(t_grid[i - 1], t_grid[i + 1], false);
        double v = 0.0;
        try {
          v = lam_abs(t, nullptr);
        } catch (const NumericalError&) {
          v = 0.0;
        }
        if (v * cfg.extremum_ratio < std::min(a, c)) add(t, SingularityKind::Pit);
      }
    }
    ++i;
  }
  return out;
}

/// Largest |lambda| and SLP condition number on the Cartesian grid
/// beta = (bx[i], by[j]), row-major in i. Singular points are recorded in
/// `error`, never thrown.
inline std::vector<ScanPoint> capacitance_surface(const std::vector<CircularResonator>& res, const Vec2& alpha,
                                                  const std::vector<double>& bx, const std::vector<double>& by,
                                                  const Lattice2D& lat, const ScanConfig& cfg = {}) {
  if (bx.empty() || by.empty()) fail(ErrorKind::InvalidArgument, "surface grid is empty");
  Tolerances loose = cfg.tol;
  loose.slp_condition_cap = std::numeric_limits<double>::infinity();
  multipole2d::CapacitanceSolver solver(res, alpha, lat, cfg.K, cfg.trunc, loose);
  std::vector<ScanPoint> out(bx.size() * by.size());
  parallel_for(out.size(), cfg.threads, [&](std::size_t idx) {
    auto& p = out[idx];
    p.beta = Vec2(bx[idx / by.size()], by[idx % by.size()]);
    try {
      const auto r = solver(p.beta);
      p.condition = r.condition;
      double m = 0.0;
      for (const cplx l : eigenvalues_sorted(r.C, cfg.tol)) m = std::max(m, std::abs(l));
      p.lambda_abs = m;
    } catch (const NumericalError& e) {
      p.error = std::string(e.name());
    }
  });
  return out;
}

}  // namespace cbs::bands2d
