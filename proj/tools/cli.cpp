#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cbs/bands2d.hpp"
#include "cbs/chain1d.hpp"
#include "cbs/lattice2d.hpp"
#include "cbs/multipole2d.hpp"
#include "cbs/ssh1d.hpp"
#include "cbs/transfer1d.hpp"

namespace cbs::cli {
namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Formatting

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string num(int v) { return std::to_string(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string show(double v) { return num(v); }
std::string show(int v) { return num(v); }
std::string show(std::size_t v) { return num(v); }
std::string show(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// ---------------------------------------------------------------------------
// Parameter registry: one entry per option, so presets and metadata see the
// same list.

struct Param {
  std::string name;
  CLI::Option* opt;
  std::function<void()> take_preset;
  std::function<std::string()> text;
  std::function<json()> value;
};

template <class S>
struct Command {
  S live{};
  S preset{};
  std::vector<Param> params;
  std::set<std::string> assumed;  // names the preset marks as assumed
  std::string preset_name;
  std::string format;
  std::string out_path;
  unsigned threads = 1;
  CLI::App* app = nullptr;

  template <class T>
  void add(const std::string& name, T S::*member, const std::string& help) {
    CLI::Option* o = app->add_option("--" + name, live.*member, help);
    if constexpr (std::is_same_v<T, std::vector<double>>) o->delimiter(',');
    params.push_back({name, o, [this, member] { live.*member = preset.*member; },
                      [this, member] { return show(live.*member); }, [this, member] { return json(live.*member); }});
  }
};

struct RunInfo {
  std::string subcommand;
  std::string preset;
  std::vector<std::pair<std::string, std::string>> params;
  json params_json = json::object();
  std::vector<std::string> assumed;
  std::string format;
  std::string out_path;
  unsigned threads = 1;
};

template <class S>
RunInfo finish(Command<S>& c, const std::string& sub,
               const std::function<bool(const std::string&, S&, std::set<std::string>&)>& lookup) {
  if (!c.preset_name.empty()) {
    c.preset = c.live;
    if (!lookup(c.preset_name, c.preset, c.assumed))
      throw ConfigError("invalid --preset: '" + c.preset_name + "' is not a preset of " + sub);
    for (auto& p : c.params) {
      if (p.opt->count() == 0) p.take_preset();
      else c.assumed.erase(p.name);
    }
  }
  RunInfo info;
  info.subcommand = sub;
  info.preset = c.preset_name;
  for (auto& p : c.params) {
    info.params.emplace_back(p.name, p.text());
    info.params_json[p.name] = p.value();
  }
  info.assumed.assign(c.assumed.begin(), c.assumed.end());
  info.format = c.format;
  info.out_path = c.out_path;
  info.threads = c.threads;
  if (info.format != "csv" && info.format != "json") throw ConfigError("invalid --format: use csv or json");
  if (info.threads < 1) throw ConfigError("invalid --threads: must be at least 1");
  return info;
}

template <class S>
void common(Command<S>& c, CLI::App* app, const std::string& default_format) {
  c.app = app;
  c.format = default_format;
  app->add_option("--preset", c.preset_name, "figure preset");
  app->add_option("--format", c.format, "csv or json")->capture_default_str();
  app->add_option("--out", c.out_path, "output file (default stdout)");
  app->add_option("--threads", c.threads, "worker threads")->capture_default_str();
}

// ---------------------------------------------------------------------------
// Validation

void positive(const std::string& name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("invalid --" + name + ": must be positive, got " + num(v));
}
void non_negative(const std::string& name, double v) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ConfigError("invalid --" + name + ": must be non-negative, got " + num(v));
}
void at_least(const std::string& name, long v, long lo) {
  if (v < lo) throw ConfigError("invalid --" + name + ": must be at least " + std::to_string(lo));
}
void pair(const std::string& name, const std::vector<double>& v) {
  if (v.size() != 2) throw ConfigError("invalid --" + name + ": expected two comma-separated numbers");
  for (double x : v)
    if (!std::isfinite(x)) throw ConfigError("invalid --" + name + ": entries must be finite");
}
Vec2 vec(const std::vector<double>& v) { return Vec2(v[0], v[1]); }
Vec2 unit(const std::string& name, const std::vector<double>& v) {
  pair(name, v);
  const Vec2 d = vec(v);
  if (d.norm() == 0.0) throw ConfigError("invalid --" + name + ": direction must be non-zero");
  return d.normalized();
}

// ---------------------------------------------------------------------------
// Output

struct Output {
  Table table;
  std::vector<std::string> notes;  // extra '#' lines after the parameters
  json results = json::object();
  json diagnostics = json::object();
};

std::string render(const RunInfo& info, const Output& o) {
  std::ostringstream s;
  if (info.format == "json") {
    json cfg;
    cfg["tool"] = "cbs";
    cfg["version"] = version;
    cfg["subcommand"] = info.subcommand;
    cfg["preset"] = info.preset.empty() ? json(nullptr) : json(info.preset);
    cfg["params"] = info.params_json;
    cfg["assumed"] = info.assumed;
    cfg["threads"] = info.threads;
    json j;
    j["config"] = cfg;
    j["results"] = o.results;
    j["diagnostics"] = o.diagnostics;
    s << j.dump(2) << '\n';
    return s.str();
  }
  s << "# cbs " << version << ' ' << info.subcommand << '\n';
  s << "# preset=" << (info.preset.empty() ? "none" : info.preset) << '\n';
  s << "# params";
  for (const auto& [k, v] : info.params) s << ' ' << k << '=' << v;
  s << '\n';
  for (const auto& a : info.assumed) s << "# assumed " << a << "=true\n";
  for (const auto& n : o.notes) s << "# " << n << '\n';
  for (std::size_t i = 0; i < o.table.header.size(); ++i) s << (i ? "," : "") << o.table.header[i];
  s << '\n';
  for (const auto& row : o.table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << csv_field(row[i]);
    s << '\n';
  }
  return s.str();
}

json table_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      const std::string& v = r[i];
      double d = 0.0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
      if (res.ec == std::errc() && res.ptr == v.data() + v.size()) o[t.header[i]] = d;
      else o[t.header[i]] = v;
    }
    rows.push_back(o);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// band1d / gap1d

struct Chain1DParams {
  double s1 = 0.6;
  double s2 = 0.0;  // 0: single resonator
  double delta = 0.1;
  std::size_t samples = 201;
  double beta_extent = 1.0;
};

bool chain_preset(const std::string& name, Chain1DParams& p, std::set<std::string>& assumed) {
  if (name == "fig2a") {
    p = {0.6, 0.0, 0.1, 201, 1.0};
    assumed = {"beta_extent", "samples"};
    return true;
  }
  if (name == "fig2b") {
    p = {0.8, 2.0, 0.1, 201, 0.3};
    assumed = {"beta_extent", "samples"};
    return true;
  }
  return false;
}

void check_chain(const Chain1DParams& p, bool dimer_required) {
  positive("s1", p.s1);
  non_negative("s2", p.s2);
  if (dimer_required && !(p.s2 > 0.0)) throw ConfigError("invalid --s2: must be positive for the dimer");
  positive("delta", p.delta);
  at_least("samples", static_cast<long>(p.samples), 2);
  non_negative("beta_extent", p.beta_extent);
}

Output run_band1d(const Chain1DParams& p, const RunInfo& info) {
  check_chain(p, false);
  std::vector<double> s{p.s1};
  if (p.s2 > 0.0) s.push_back(p.s2);
  const auto geom = chain1d::ChainGeometry1D::uniform(s);
  const double L = geom.cell_length();
  const auto table = chain1d::band_sweep_1d(geom, chain1d::standard_path_1d(L, p.samples, p.beta_extent), p.delta,
                                            {}, info.threads);
  Output o;
  o.table.header = {"alpha", "beta", "branch", "omega", "segment"};
  for (const auto& r : table.rows)
    o.table.rows.push_back({num(r.alpha), num(r.beta), num(r.branch), num(r.omega), r.segment});
  o.notes.push_back("cell_length=" + num(L) + " omitted=" + num(table.omitted));
  o.results["cell_length"] = L;
  o.results["rows"] = table_json(o.table);
  o.diagnostics["omitted_non_real"] = table.omitted;
  return o;
}

Output run_gap1d(const Chain1DParams& p, const RunInfo&) {
  check_chain(p, true);
  const double L = 2.0 + p.s1 + p.s2;
  const auto interval = chain1d::beta_admissible_interval(p.s1, p.s2, L);
  Output o;
  o.table.header = {"branch", "alpha", "beta", "lambda", "omega"};
  using chain1d::DimerBranch;
  auto sweep = [&](DimerBranch b, double lo, double hi, std::size_t n) {
    const auto info = chain1d::dimer_branch_info(b, p.s1, p.s2, L);
    for (std::size_t j = 0; j < n; ++j) {
      const double beta = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
      const double lam = chain1d::dimer_gap_lambda(p.s1, p.s2, L, b, beta);
      o.table.rows.push_back(
          {chain1d::to_string(b), num(info.alpha_pin), num(beta), num(lam), num(std::sqrt(p.delta * lam))});
    }
  };
  sweep(DimerBranch::Omega1, interval.lo, interval.hi, p.samples);
  sweep(DimerBranch::Omega2, interval.lo, interval.hi, p.samples);
  sweep(DimerBranch::Omega3, -p.beta_extent, p.beta_extent, p.samples);
  sweep(DimerBranch::Omega4, 0.0, 0.0, 1);
  o.notes.push_back("cell_length=" + num(L) + " beta_max=" + num(interval.hi));
  o.results["cell_length"] = L;
  o.results["beta_max"] = interval.hi;
  o.results["rows"] = table_json(o.table);
  return o;
}

// ---------------------------------------------------------------------------
// transfer

struct TransferParams {
  double n0 = 1.8;
  double a = 0.2;
  double b = 0.5;  // half the spacing between neighbouring resonators
  double delta = 1.0;
  double k_max = 8.0;
  std::size_t k_samples = 2000;
};

bool transfer_preset(const std::string& name, TransferParams& p, std::set<std::string>& assumed) {
  if (name == "fig3a" || name == "fig3b") {
    p = {1.8, 0.2, 0.5, name == "fig3a" ? 1.0 : 0.05, 8.0, 2000};
    assumed = {"b", "k_max", "k_samples"};
    return true;
  }
  return false;
}

Output run_transfer(const TransferParams& p, const RunInfo& info) {
  positive("n0", p.n0);
  positive("a", p.a);
  positive("b", p.b);
  positive("delta", p.delta);
  positive("k_max", p.k_max);
  at_least("k_samples", static_cast<long>(p.k_samples), 2);
  const double L = 2.0 * p.a + 2.0 * p.b;
  std::vector<double> ks(p.k_samples);
  for (std::size_t i = 0; i < ks.size(); ++i)
    ks[i] = p.k_max * static_cast<double>(i + 1) / static_cast<double>(ks.size());
  const auto t = transfer1d::general_band_sweep(ks, p.a, p.n0, p.delta, L, {}, info.threads);
  Output o;
  o.table.header = {"k", "branch", "alpha", "beta", "gap", "multiplier_re", "multiplier_im"};
  for (const auto& r : t.rows)
    o.table.rows.push_back({num(r.k), num(r.branch), num(r.alpha), num(r.beta), r.gap ? "1" : "0",
                            num(r.multiplier.real()), num(r.multiplier.imag())});
  o.notes.push_back("cell_length=" + num(L) + " degenerate=" + num(t.degenerate));
  o.results["cell_length"] = L;
  o.results["rows"] = table_json(o.table);
  o.diagnostics["degenerate"] = t.degenerate;
  return o;
}

// ---------------------------------------------------------------------------
// ssh

struct SshParams {
  std::size_t resonators = 41;
  double s1 = 1.0;
  double s2 = 2.0;
  double delta = 1e-3;
  double length = 1.0;
  std::size_t margin = 3;
};

bool ssh_preset(const std::string& name, SshParams& p, std::set<std::string>& assumed) {
  if (name == "fig5") {
    p = {41, 1.0, 2.0, 1e-3, 1.0, 3};
    assumed = {"length", "margin"};
    return true;
  }
  return false;
}

Output run_ssh(const SshParams& p, const RunInfo&) {
  if (p.resonators < 5 || p.resonators % 4 != 1) throw ConfigError("invalid --resonators: must be 4m+1 with m >= 1");
  positive("s1", p.s1);
  positive("s2", p.s2);
  positive("delta", p.delta);
  positive("length", p.length);
  const ssh1d::DefectedChain chain(p.resonators, p.s1, p.s2, p.length, 1.0, p.delta);
  const auto mode = ssh1d::interface_eigenpair(chain, p.margin);
  const double L = chain.cell_length();

  Output o;
  json env_json = nullptr;
  std::vector<double> envelope(p.resonators, std::numeric_limits<double>::quiet_NaN());
  if (chain.dimers_per_side() >= 2 * p.margin + 2) {
    const auto env = ssh1d::decay_envelope_check(mode.mode, mode.predicted_beta, L, p.margin);
    env_json = {{"slope_left", env.slope_left},
                {"slope_right", env.slope_right},
                {"expected_slope", -env.expected},
                {"rel_error_left", env.rel_error_left},
                {"rel_error_right", env.rel_error_right},
                {"envelope_constant", env.envelope_constant},
                {"max_violation", env.max_violation},
                {"fitted_cells", env.fitted_cells}};
    const std::size_t c = chain.interface_index();
    for (std::size_t i = 0; i < p.resonators; ++i) {
      // Cell distance of resonator i: the dimer it belongs to, counted from the centre.
      const std::size_t off = i > c ? i - c : c - i;
      const double d = static_cast<double>((off + 1) / 2);
      envelope[i] = env.envelope_constant * std::exp(-env.expected * d);
    }
  }

  const auto sp = chain.spacings();
  double x = 0.0;
  o.table.header = {"index", "x", "u", "envelope"};
  json modes = json::array();
  for (std::size_t i = 0; i < p.resonators; ++i) {
    const double centre = x + 0.5 * p.length;
    const double u = mode.mode(static_cast<Eigen::Index>(i));
    o.table.rows.push_back({num(i), num(centre), num(u), num(envelope[i])});
    modes.push_back(u);
    if (i < sp.size()) x += p.length + sp[i];
  }

  o.results = {{"omega", mode.omega},
               {"lambda", mode.lambda},
               {"lambda_closed_form", ssh1d::interface_lambda_closed_form(p.s1, p.s2)},
               {"predicted_beta", mode.predicted_beta},
               {"fitted_beta", mode.fitted_beta},
               {"cell_length", L},
               {"gap_lambda", {mode.gap_lo, mode.gap_hi}},
               {"envelope", env_json},
               {"mode", modes}};
  o.diagnostics = {{"in_gap_count", mode.in_gap_count}};
  o.notes.push_back("omega=" + num(mode.omega) + " lambda=" + num(mode.lambda) +
                    " predicted_beta=" + num(mode.predicted_beta) + " fitted_beta=" + num(mode.fitted_beta));
  return o;
}

// ---------------------------------------------------------------------------
// greens-convergence

struct GreensParams {
  std::vector<double> x{0.3, 0.15};
  std::vector<double> alpha{1.8, -1.9};
  std::vector<double> beta{0.3, -0.3};
  double k = 0.25;
  double period = 1.0;
  int n_min = 2;
  int n_max = 64;
  int n_ref = 512;
};

bool greens_preset(const std::string& name, GreensParams& p, std::set<std::string>& assumed) {
  if (name == "figA1") {
    p = GreensParams{};
    assumed = {"x", "alpha", "beta", "k", "n_ref"};
    return true;
  }
  return false;
}

Output run_greens(const GreensParams& p, const RunInfo& info) {
  pair("x", p.x);
  pair("alpha", p.alpha);
  pair("beta", p.beta);
  non_negative("k", p.k);
  positive("period", p.period);
  at_least("n_min", p.n_min, 1);
  if (p.n_max < p.n_min) throw ConfigError("invalid --n_max: must not be below --n_min");
  if (p.n_ref <= p.n_max) throw ConfigError("invalid --n_ref: must exceed --n_max");
  const auto lat = lattice2d::Lattice2D::square(p.period);
  const auto q = make_quasimomentum(vec(p.alpha), vec(p.beta));
  std::vector<int> ns;
  for (int n = p.n_min; n <= p.n_max; ++n) ns.push_back(n);
  const auto rep = lattice2d::truncation_convergence(vec(p.x), q, p.k, lat, ns, p.n_ref, {}, info.threads);

  // Split identity at the production truncation.
  const lattice2d::DualTruncation t10{10};
  const cplx full = lattice2d::greens_gap(vec(p.x), q, p.k, lat, t10);
  const cplx split = lattice2d::greens_bulk(vec(p.x), q, p.k, lat, t10) +
                     lattice2d::greens_remainder(vec(p.x), q, p.k, lat, t10);
  const double split_rel = std::abs(full - split) / std::abs(full);

  Output o;
  o.table.header = {"n", "error"};
  for (const auto& r : rep.rows) o.table.rows.push_back({num(r.n), num(r.error)});
  o.notes.push_back("order=" + num(rep.order) + " split_residual=" + num(split_rel));
  o.results = {{"order", rep.order},
               {"reference", {rep.reference.real(), rep.reference.imag()}},
               {"rows", table_json(o.table)}};
  o.diagnostics = {{"split_identity_relative_residual", split_rel}};
  return o;
}

// ---------------------------------------------------------------------------
// band2d / scan2d

std::vector<multipole2d::CircularResonator> resonators(const std::vector<double>& centres, double radius) {
  if (centres.empty() || centres.size() % 2 != 0)
    throw ConfigError("invalid --centers: expected x,y pairs separated by commas");
  positive("radius", radius);
  std::vector<multipole2d::CircularResonator> res;
  for (std::size_t i = 0; i < centres.size(); i += 2) res.push_back({Vec2(centres[i], centres[i + 1]), radius, 1.0});
  return res;
}

struct Band2DParams {
  std::vector<double> centers{0.0, 0.0};
  double radius = 0.05;
  double period = 1.0;
  std::vector<double> beta_dir{1.0, 1.0};
  double delta = 1e-3;
  int K = 5;
  int n = 10;
  std::size_t samples_per_segment = 21;
  std::size_t t_samples = 160;
  double t_fallback = 10.0;
};

bool band2d_preset(const std::string& name, Band2DParams& p, std::set<std::string>& assumed) {
  p = Band2DParams{};
  assumed = {"delta", "samples_per_segment", "t_samples", "t_fallback"};
  if (name == "fig6") return true;
  if (name == "fig7") {
    p.beta_dir = {1.0, 0.0};
    return true;
  }
  if (name == "fig8") {
    p.centers = {-0.15, -0.15, 0.15, 0.15};
    assumed.insert("centers");
    return true;
  }
  return false;
}

Output run_band2d(const Band2DParams& p, const RunInfo& info) {
  const auto res = resonators(p.centers, p.radius);
  positive("period", p.period);
  const Vec2 dir = unit("beta_dir", p.beta_dir);
  positive("delta", p.delta);
  at_least("K", p.K, 0);
  at_least("n", p.n, 1);
  at_least("samples_per_segment", static_cast<long>(p.samples_per_segment), 2);
  at_least("t_samples", static_cast<long>(p.t_samples), 3);
  positive("t_fallback", p.t_fallback);

  const auto lat = lattice2d::Lattice2D::square(p.period);
  bands2d::SweepConfig cfg;
  cfg.K = p.K;
  cfg.trunc = {p.n};
  cfg.delta = p.delta;
  cfg.t_samples = p.t_samples;
  cfg.t_fallback = p.t_fallback;
  cfg.threads = info.threads;
  const auto path = BrillouinPath::square_gmxg(p.period, p.samples_per_segment).sample();
  const auto r = bands2d::gap_sweep_2d(res, lat, path, dir, cfg);

  Output o;
  o.table.header = {"sample", "label", "arc", "alpha_x", "alpha_y", "t", "beta_x", "beta_y",
                    "band", "branch", "kind", "lambda_re", "lambda_im", "omega"};
  for (const auto& row : r.rows) {
    o.table.rows.push_back({num(row.sample), path[row.sample].label, num(row.arc), num(row.alpha.x()),
                            num(row.alpha.y()), num(row.t), num(row.t * dir.x()), num(row.t * dir.y()),
                            num(row.band), num(row.branch), bands2d::to_string(row.kind), num(row.lambda.real()),
                            num(row.lambda.imag()), num(row.omega)});
  }
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"sample", f.sample}, {"t", f.t}, {"error", f.error}});
  o.notes.push_back("branches=" + num(r.branches) + " failures=" + num(r.failures.size()));
  o.results = {{"branches", r.branches}, {"rows", table_json(o.table)}};
  o.diagnostics = {{"failures", failures}};
  return o;
}

struct Scan2DParams {
  std::vector<double> centers{0.0, 0.0};
  double radius = 0.005;
  double period = 1.0;
  std::vector<double> alpha{pi, pi};
  std::vector<double> dir{1.0, 1.0};
  int K = 1;
  int n = 10;
  double t_min = 0.05;
  double t_max = 15.0;
  std::size_t t_samples = 600;
  std::size_t plane = 0;  // >0: also evaluate a plane x plane grid on [-extent, extent]^2
  double extent = 15.0;
};

bool scan2d_preset(const std::string& name, Scan2DParams& p, std::set<std::string>& assumed) {
  if (name == "fig7dilute") {
    p = Scan2DParams{};
    p.plane = 121;
    assumed = {"K", "t_samples", "t_max", "plane", "extent"};
    return true;
  }
  return false;
}

Output run_scan2d(const Scan2DParams& p, const RunInfo& info) {
  const auto res = resonators(p.centers, p.radius);
  positive("period", p.period);
  pair("alpha", p.alpha);
  const Vec2 dir = unit("dir", p.dir);
  at_least("K", p.K, 0);
  at_least("n", p.n, 1);
  non_negative("t_min", p.t_min);
  if (!(p.t_max > p.t_min)) throw ConfigError("invalid --t_max: must exceed --t_min");
  at_least("t_samples", static_cast<long>(p.t_samples), 3);
  if (p.plane > 0) positive("extent", p.extent);
  if (p.plane == 1) throw ConfigError("invalid --plane: need at least two points per axis");

  const auto lat = lattice2d::Lattice2D::square(p.period);
  multipole2d::validate_resonators(res, lat);
  bands2d::ScanConfig cfg;
  cfg.K = p.K;
  cfg.trunc = {p.n};
  cfg.threads = info.threads;
  std::vector<double> ts(p.t_samples);
  for (std::size_t i = 0; i < ts.size(); ++i)
    ts[i] = p.t_min + (p.t_max - p.t_min) * static_cast<double>(i) / static_cast<double>(ts.size() - 1);
  const auto scan = bands2d::singularity_scan(res, vec(p.alpha), dir, ts, lat, cfg);

  Output o;
  json sing = json::array();
  for (const auto& s : scan.singular) {
    sing.push_back({{"t", s.t},
                    {"beta", {s.beta.x(), s.beta.y()}},
                    {"kind", bands2d::to_string(s.kind)},
                    {"lambda_abs", s.lambda_abs},
                    {"nearest_rayleigh", s.nearest_rayleigh},
                    {"rel_distance", s.rel_distance}});
    o.notes.push_back("singular kind=" + bands2d::to_string(s.kind) + " t=" + num(s.t) +
                      " nearest_rayleigh=" + num(s.nearest_rayleigh) + " rel_distance=" + num(s.rel_distance));
  }
  for (double r : scan.rayleigh) o.notes.push_back("rayleigh t=" + num(r));

  o.table.header = {"beta_x", "beta_y", "lambda_abs", "condition", "error"};
  auto push = [&](const bands2d::ScanPoint& g) {
    o.table.rows.push_back({num(g.beta.x()), num(g.beta.y()), num(g.lambda_abs), num(g.condition), g.error});
  };
  if (p.plane > 0) {
    std::vector<double> axis(p.plane);
    for (std::size_t i = 0; i < p.plane; ++i)
      axis[i] = -p.extent + 2.0 * p.extent * static_cast<double>(i) / static_cast<double>(p.plane - 1);
    for (const auto& g : bands2d::capacitance_surface(res, vec(p.alpha), axis, axis, lat, cfg)) push(g);
  } else {
    for (const auto& g : scan.grid) push(g);
  }
  o.results = {{"singular", sing}, {"rayleigh", scan.rayleigh}, {"grid", table_json(o.table)}};
  o.diagnostics = {{"line_points", scan.grid.size()}};
  return o;
}

// ---------------------------------------------------------------------------

int emit(const RunInfo& info, const Output& o, std::ostream& out, std::ostream& err) {
  const std::string text = render(info, o);
  if (info.out_path.empty()) {
    out << text;
    return Ok;
  }
  std::ofstream f(info.out_path, std::ios::binary);
  if (!f) {
    err << "error: cannot open --out file '" << info.out_path << "'\n";
    return ConfigFailure;
  }
  f << text;
  return f ? Ok : ConfigFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Complex band structures of subwavelength resonator systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version));

  Command<Chain1DParams> band1d, gap1d;
  Command<TransferParams> transfer;
  Command<SshParams> ssh;
  Command<GreensParams> greens;
  Command<Band2DParams> band2d;
  Command<Scan2DParams> scan2d;

  for (auto* c : {&band1d, &gap1d}) {
    const bool band = c == &band1d;
    common(*c, app.add_subcommand(band ? "band1d" : "gap1d",
                                  band ? "1D bulk bands and pinned gap functions" : "closed-form dimer gap branches"),
           "csv");
    c->add("s1", &Chain1DParams::s1, "first spacing");
    c->add("s2", &Chain1DParams::s2, "second spacing (0: single resonator)");
    c->add("delta", &Chain1DParams::delta, "contrast");
    c->add("samples", &Chain1DParams::samples, "samples per segment");
    c->add("beta_extent", &Chain1DParams::beta_extent, "largest |beta| on gap segments");
  }

  common(transfer, app.add_subcommand("transfer", "transfer-matrix sweep over k"), "csv");
  transfer.add("n0", &TransferParams::n0, "refractive index inside the resonator");
  transfer.add("a", &TransferParams::a, "resonator half-width");
  transfer.add("b", &TransferParams::b, "half spacing, cell length 2a+2b");
  transfer.add("delta", &TransferParams::delta, "contrast");
  transfer.add("k_max", &TransferParams::k_max, "largest wavenumber");
  transfer.add("k_samples", &TransferParams::k_samples, "number of k samples");

  common(ssh, app.add_subcommand("ssh", "interface mode of a defected dimer chain"), "json");
  ssh.add("resonators", &SshParams::resonators, "resonator count, 4m+1");
  ssh.add("s1", &SshParams::s1, "first spacing");
  ssh.add("s2", &SshParams::s2, "second spacing");
  ssh.add("delta", &SshParams::delta, "contrast");
  ssh.add("length", &SshParams::length, "resonator length");
  ssh.add("margin", &SshParams::margin, "cells dropped at each end of the decay fit");

  common(greens, app.add_subcommand("greens-convergence", "lattice-sum truncation error"), "csv");
  greens.add("x", &GreensParams::x, "evaluation point x,y");
  greens.add("alpha", &GreensParams::alpha, "real quasimomentum");
  greens.add("beta", &GreensParams::beta, "imaginary quasimomentum");
  greens.add("k", &GreensParams::k, "wavenumber");
  greens.add("period", &GreensParams::period, "square lattice period");
  greens.add("n_min", &GreensParams::n_min, "smallest truncation");
  greens.add("n_max", &GreensParams::n_max, "largest truncation");
  greens.add("n_ref", &GreensParams::n_ref, "reference truncation");

  common(band2d, app.add_subcommand("band2d", "2D complex band structure along Gamma-M-X-Gamma"), "csv");
  band2d.add("centers", &Band2DParams::centers, "resonator centres x1,y1,x2,y2,...");
  band2d.add("radius", &Band2DParams::radius, "resonator radius");
  band2d.add("period", &Band2DParams::period, "square lattice period");
  band2d.add("beta_dir", &Band2DParams::beta_dir, "decay direction x,y");
  band2d.add("delta", &Band2DParams::delta, "contrast");
  band2d.add("K", &Band2DParams::K, "multipole order");
  band2d.add("n", &Band2DParams::n, "lattice truncation");
  band2d.add("samples_per_segment", &Band2DParams::samples_per_segment, "alpha samples per path segment");
  band2d.add("t_samples", &Band2DParams::t_samples, "coarse |beta| samples per alpha");
  band2d.add("t_fallback", &Band2DParams::t_fallback, "|beta| range when no Rayleigh value bounds it");

  common(scan2d, app.add_subcommand("scan2d", "capacitance singularities over beta"), "csv");
  scan2d.add("centers", &Scan2DParams::centers, "resonator centres x1,y1,...");
  scan2d.add("radius", &Scan2DParams::radius, "resonator radius");
  scan2d.add("period", &Scan2DParams::period, "square lattice period");
  scan2d.add("alpha", &Scan2DParams::alpha, "fixed quasimomentum");
  scan2d.add("dir", &Scan2DParams::dir, "scan direction for singularity detection");
  scan2d.add("K", &Scan2DParams::K, "multipole order");
  scan2d.add("n", &Scan2DParams::n, "lattice truncation");
  scan2d.add("t_min", &Scan2DParams::t_min, "start of the line scan");
  scan2d.add("t_max", &Scan2DParams::t_max, "end of the line scan");
  scan2d.add("t_samples", &Scan2DParams::t_samples, "line scan samples");
  scan2d.add("plane", &Scan2DParams::plane, "points per axis of the beta-plane grid (0: write the line)");
  scan2d.add("extent", &Scan2DParams::extent, "half-width of the beta-plane grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForVersion&) {
    out << version << '\n';
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return ConfigFailure;
  }

  try {
    if (band1d.app->parsed()) {
      const auto info = finish<Chain1DParams>(band1d, "band1d", chain_preset);
      return emit(info, run_band1d(band1d.live, info), out, err);
    }
    if (gap1d.app->parsed()) {
      const auto info = finish<Chain1DParams>(gap1d, "gap1d", [](const std::string& n, auto& p, auto& a) {
        return n == "fig2b" && chain_preset(n, p, a);
      });
      return emit(info, run_gap1d(gap1d.live, info), out, err);
    }
    if (transfer.app->parsed()) {
      const auto info = finish<TransferParams>(transfer, "transfer", transfer_preset);
      return emit(info, run_transfer(transfer.live, info), out, err);
    }
    if (ssh.app->parsed()) {
      const auto info = finish<SshParams>(ssh, "ssh", ssh_preset);
      return emit(info, run_ssh(ssh.live, info), out, err);
    }
    if (greens.app->parsed()) {
      const auto info = finish<GreensParams>(greens, "greens-convergence", greens_preset);
      return emit(info, run_greens(greens.live, info), out, err);
    }
    if (band2d.app->parsed()) {
      const auto info = finish<Band2DParams>(band2d, "band2d", band2d_preset);
      return emit(info, run_band2d(band2d.live, info), out, err);
    }
    if (scan2d.app->parsed()) {
      const auto info = finish<Scan2DParams>(scan2d, "scan2d", scan2d_preset);
      return emit(info, run_scan2d(scan2d.live, info), out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return ConfigFailure;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    const bool config = e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::InvalidGeometry;
    return config ? ConfigFailure : NumericalFailure;
  }
  err << "error: no subcommand\n";
  return ConfigFailure;
}

}  // namespace cbs::cli
