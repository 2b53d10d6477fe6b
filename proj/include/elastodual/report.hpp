#pragma once
// Experiment configuration, command pipelines and report serialisation.
//
// Config files are flat "key = value" lines with dotted section keys; '#'
// starts a comment.  Lists are separated by commas or blanks.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "elastodual/elastodual.hpp"

namespace elastodual {

inline constexpr const char* kVersion = "elastodual 1.0.0";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

struct LoadSpec {
  std::string preset = "none";     // none | zero | sine-bump | ramp
  std::optional<double> amplitude;  // unset = auto
  std::string body_file;
  std::string traction_file;
};

struct ExperimentConfig {
  LameParams lame{1.0, 1.0};
  std::optional<double> K;  // unset = auto
  double K_safety = 0.5;
  GridConfig grid;
  LoadSpec loads;
  Tolerances tol;
  SampledCheckOptions checks;
  std::vector<int> ladder{5, 9, 17};
  std::uint64_t seed = 0;
  bool deterministic = true;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::string s = v;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x)) throw ValidationError(key + ": expected a finite number, got '" + v + "'");
  return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected an integer, got '" + v + "'");
  }
  if (pos != v.size()) throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ValidationError(key + ": expected on/off, got '" + v + "'");
}

inline std::array<double, 3> to_triple(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() != 3) throw ValidationError(key + ": expected three values");
  return {to_double(key, items[0]), to_double(key, items[1]), to_double(key, items[2])};
}

inline std::array<int, 3> to_dims(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() != 3) throw ValidationError(key + ": expected three values");
  std::array<int, 3> d{};
  for (int a = 0; a < 3; ++a) {
    const long long n = to_int(key, items[a]);
    if (n < 3 || n > 4096) throw ValidationError(key + ": node counts must lie in [3, 4096]");
    d[a] = static_cast<int>(n);
  }
  return d;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> m = [] {
    std::map<std::string, Setter> s;
    auto tol_d = [&s](const std::string& k, double Tolerances::*f) {
      s["tol." + k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) { c.tol.*f = to_double(key, v); };
    };
    auto tol_i = [&s](const std::string& k, int Tolerances::*f) {
      s["tol." + k] = [f](ExperimentConfig& c, const std::string& key, const std::string& v) {
        const long long n = to_int(key, v);
        if (n < 0 || n > 100000000) throw ValidationError(key + ": out of range");
        c.tol.*f = static_cast<int>(n);
      };
    };
    s["material.lambda"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lame.lambda = to_double(k, v); };
    s["material.mu"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lame.mu = to_double(k, v); };
    s["K"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto")
        c.K.reset();
      else
        c.K = to_double(k, v);
    };
    s["K.safety"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.K_safety = to_double(k, v); };
    s["grid.extents"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid.extents = to_triple(k, v); };
    s["grid.dims"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid.dims = to_dims(k, v); };
    s["grid.gamma0"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const auto faces = split_list(v);
      if (faces.empty()) throw ValidationError(k + ": at least one face must be Gamma0");
      for (Face f : kAllFaces) c.grid.tags[static_cast<int>(f)] = BoundaryTag::Gamma1;
      for (const auto& name : faces) {
        try {
          c.grid.tags[static_cast<int>(parse_face(name))] = BoundaryTag::Gamma0;
        } catch (const ValidationError& e) {
          throw ValidationError(k + ": " + e.what());
        }
      }
    };
    s["loads.preset"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v != "none") {
        try {
          (void)parse_preset(v);
        } catch (const ValidationError& e) {
          throw ValidationError(k + ": " + e.what());
        }
      }
      c.loads.preset = v;
    };
    s["loads.amplitude"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto")
        c.loads.amplitude.reset();
      else
        c.loads.amplitude = to_double(k, v);
    };
    s["loads.body_file"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.loads.body_file = v; };
    s["loads.traction_file"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.loads.traction_file = v; };
    s["run.ladder"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.ladder.clear();
      for (const auto& item : split_list(v)) {
        const long long n = to_int(k, item);
        if (n < 3 || n > 4096) throw ValidationError(k + ": node counts must lie in [3, 4096]");
        c.ladder.push_back(static_cast<int>(n));
      }
      if (c.ladder.size() < 2) throw ValidationError(k + ": need at least two levels");
    };
    s["checks.nodes"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.checks.nodes = static_cast<int>(to_int(k, v)); };
    s["checks.directions"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.checks.directions = static_cast<int>(to_int(k, v));
    };
    s["checks.radius"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.checks.radius = to_double(k, v); };
    s["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const long long n = to_int(k, v);
      if (n < 0) throw ValidationError(k + ": must be non-negative");
      c.seed = static_cast<std::uint64_t>(n);
    };
    s["deterministic"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.deterministic = to_bool(k, v); };

    tol_d("grad_tol", &Tolerances::grad_tol);
    tol_i("max_iters", &Tolerances::max_iters);
    tol_d("step_init", &Tolerances::step_init);
    tol_d("step_shrink", &Tolerances::step_shrink);
    tol_d("armijo_slope", &Tolerances::armijo_slope);
    tol_d("barrier_weight", &Tolerances::barrier_weight);
    tol_d("barrier_decay", &Tolerances::barrier_decay);
    tol_i("barrier_stages", &Tolerances::barrier_stages);
    tol_d("inner_tol", &Tolerances::inner_tol);
    tol_i("inner_max_iters", &Tolerances::inner_max_iters);
    tol_i("projection_alternations", &Tolerances::projection_alternations);
    tol_i("outer_max_iters", &Tolerances::outer_max_iters);
    tol_d("outer_rel_tol", &Tolerances::outer_rel_tol);
    tol_i("outer_patience", &Tolerances::outer_patience);
    tol_d("gap_tol", &Tolerances::gap_tol);
    tol_d("condition_cap", &Tolerances::condition_cap);
    tol_d("projection_tol", &Tolerances::projection_tol);
    return s;
  }();
  return m;
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  if (!(c.lame.lambda > 0.0)) throw ValidationError("material.lambda: must be positive");
  if (!(c.lame.mu > 0.0)) throw ValidationError("material.mu: must be positive");
  if (c.K && !(*c.K > 0.0)) throw ValidationError("K: must be positive or 'auto'");
  if (!(c.K_safety > 0.0 && c.K_safety < 1.0)) throw ValidationError("K.safety: must lie in (0, 1)");
  for (int a = 0; a < 3; ++a)
    if (!(c.grid.extents[a] > 0.0)) throw ValidationError("grid.extents: must be positive");
  if (c.loads.amplitude && !(*c.loads.amplitude >= 0.0)) throw ValidationError("loads.amplitude: must be non-negative");
  if (c.loads.preset != "none" && !(c.loads.body_file.empty() && c.loads.traction_file.empty()))
    throw ValidationError("loads: preset and load files are mutually exclusive");
  if (c.checks.nodes < 1) throw ValidationError("checks.nodes: must be positive");
  if (c.checks.directions < 1) throw ValidationError("checks.directions: must be positive");
  if (!(c.checks.radius > 0.0)) throw ValidationError("checks.radius: must be positive");
  const Tolerances& t = c.tol;
  if (!(t.step_shrink > 0.0 && t.step_shrink < 1.0)) throw ValidationError("tol.step_shrink: must lie in (0, 1)");
  if (!(t.step_init > 0.0)) throw ValidationError("tol.step_init: must be positive");
  if (!(t.grad_tol > 0.0)) throw ValidationError("tol.grad_tol: must be positive");
  if (!(t.inner_tol > 0.0)) throw ValidationError("tol.inner_tol: must be positive");
  if (!(t.condition_cap > 1.0)) throw ValidationError("tol.condition_cap: must exceed 1");
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>") {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& setters = detail::config_setters();
    const auto it = setters.find(key);
    if (it == setters.end()) throw ValidationError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ValidationError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ValidationError(key + ": missing value");
    it->second(c, key, value);
  }
  validate(c);
  return c;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

inline double resolve_K(const ExperimentConfig& c) { return c.K ? *c.K : select_K(c.lame, c.K_safety); }

/// Material, K, grid and loads resolved into a model; a preset also returns its manufactured bundle.
struct ResolvedModel {
  ModelConfig model;
  std::optional<CriticalPointBundle> bundle;
  double amplitude = 0.0;
};

inline ResolvedModel resolve_model(const ExperimentConfig& c, const GridConfig& gc, std::optional<double> amplitude = {}) {
  const double K = resolve_K(c);
  Grid grid = build_grid(gc);
  std::optional<CriticalPointBundle> bundle;
  double amp = 0.0;
  Loads loads = Loads::zero(grid);
  if (c.loads.preset != "none") {
    const Preset p = parse_preset(c.loads.preset);
    amp = amplitude ? *amplitude : (c.loads.amplitude ? *c.loads.amplitude : auto_amplitude(p, c.lame, K, grid));
    const VectorField u0 = scaled(preset_unit_field(p, grid), amp);
    bundle = manufacture_critical_point(u0, c.lame, K, grid);
    loads = bundle->loads;
  } else {
    if (!c.loads.body_file.empty()) loads.body = load_vector_field(c.loads.body_file, grid);
    if (!c.loads.traction_file.empty()) load_traction(c.loads.traction_file, grid, loads);
  }
  return ResolvedModel{make_model(c.lame, K, std::move(grid), std::move(loads), c.tol), std::move(bundle), amp};
}

inline SampledCheckOptions check_options(const ExperimentConfig& c) {
  SampledCheckOptions o = c.checks;
  o.seed = c.seed;
  return o;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace detail

inline Json to_json(const EnergyBreakdown& e) {
  return {{"J", detail::num(e.J)},
          {"G", detail::num(e.G)},
          {"F_lambda2", detail::num(e.F_lambda2)},
          {"G_K", detail::num(e.G_K)},
          {"load_work_volume", detail::num(e.load_work_volume)},
          {"load_work_surface", detail::num(e.load_work_surface)}};
}

inline Json to_json(const SetCheck& s) { return {{"ok", s.ok}, {"margin", detail::num(s.margin)}}; }

inline Json to_json(const FeasibilityReport& f) {
  Json j;
  j["B1"] = to_json(f.B1);
  j["B2"] = to_json(f.B2);
  if (f.C1) j["C1"] = to_json(*f.C1);
  j["A4"] = {{"ok", f.A4.ok}, {"sigma_margin", detail::num(f.A4.sigma_margin)}, {"Q_margin", detail::num(f.A4.q_margin)}};
  j["A2_residual"] = detail::num(f.equilibrium.A2);
  j["A3_residual"] = detail::num(f.equilibrium.A3);
  if (f.C_sampled) {
    Json c = {{"pass", f.C_sampled->pass}, {"heuristic", true}};
    if (f.C_sampled->witness) {
      const CWitness& w = *f.C_sampled->witness;
      c["witness"] = {{"node", w.node}, {"violation", detail::num(w.violation)}};
    }
    j["C_sampled"] = c;
  }
  if (f.A1_sampled)
    j["A1_sampled"] = {{"pass", f.A1_sampled->pass},
                       {"worst_deviation", detail::num(f.A1_sampled->worst_deviation)},
                       {"heuristic", true}};
  j["A_star_feasible"] = f.A_star_verified ? "verified" : "assumed";
  return j;
}

inline Json to_json(const ResidualMap& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = {{"linf", detail::num(v.linf)}, {"l2", detail::num(v.l2)}};
  return j;
}

inline Json to_json(const GapReport& g) {
  return {{"J", detail::num(g.primal.J)},
          {"J_star", detail::num(g.J_star)},
          {"J_tilde_star", detail::num(g.J_tilde_star)},
          {"gap", detail::num(g.gap)},
          {"gap_star", detail::num(g.gap_star)},
          {"el17_residual", detail::num(g.el17_residual)},
          {"el18_residual", detail::num(g.el18_residual)},
          {"inner_iterations", g.inner_iterations},
          {"primal", to_json(g.primal)},
          {"feasibility", to_json(g.feasibility)},
          {"extremality", to_json(g.extremality)}};
}

inline Json to_json(const PrimalResult& p) {
  return {{"energy", to_json(p.energy)},
          {"iterations", p.iterations},
          {"grad_norm_inf", detail::num(p.grad_norm_inf)},
          {"c1_margin", detail::num(p.c1_margin)},
          {"converged", p.converged}};
}

inline Json to_json(const DualSolveResult& d) {
  Json trace = Json::array();
  for (const auto& [i, v] : d.ascent_trace) trace.push_back({i, detail::num(v)});
  return {{"J_tilde_star", detail::num(d.J_tilde_star)},
          {"inner_iterations", d.inner_iterations},
          {"outer_iterations", d.outer_iterations},
          {"converged", d.converged},
          {"stop_reason", d.stop_reason},
          {"no_feasible_ascent_step", d.no_feasible_ascent_step},
          {"feasibility", to_json(d.feasibility)},
          {"ascent_trace", trace}};
}

inline Json config_echo(const ExperimentConfig& c, const GridConfig& gc, double K) {
  Json faces = Json::array();
  for (Face f : kAllFaces)
    if (gc.tags[static_cast<int>(f)] == BoundaryTag::Gamma0) faces.push_back(face_name(f));
  const Tolerances& t = c.tol;
  return {{"material", {{"lambda", c.lame.lambda}, {"mu", c.lame.mu}}},
          {"K", {{"value", K}, {"auto", !c.K.has_value()}, {"safety", c.K_safety}}},
          {"grid", {{"extents", gc.extents}, {"dims", gc.dims}, {"gamma0", faces}}},
          {"loads",
           {{"preset", c.loads.preset},
            {"amplitude", c.loads.amplitude ? Json(*c.loads.amplitude) : Json("auto")},
            {"body_file", c.loads.body_file},
            {"traction_file", c.loads.traction_file}}},
          {"tol",
           {{"grad_tol", t.grad_tol},
            {"max_iters", t.max_iters},
            {"step_init", t.step_init},
            {"step_shrink", t.step_shrink},
            {"armijo_slope", t.armijo_slope},
            {"barrier_weight", t.barrier_weight},
            {"barrier_decay", t.barrier_decay},
            {"barrier_stages", t.barrier_stages},
            {"inner_tol", t.inner_tol},
            {"inner_max_iters", t.inner_max_iters},
            {"projection_alternations", t.projection_alternations},
            {"outer_max_iters", t.outer_max_iters},
            {"outer_rel_tol", t.outer_rel_tol},
            {"outer_patience", t.outer_patience},
            {"gap_tol", t.gap_tol},
            {"condition_cap", t.condition_cap},
            {"projection_tol", t.projection_tol}}},
          {"checks", {{"nodes", c.checks.nodes}, {"directions", c.checks.directions}, {"radius", c.checks.radius}}},
          {"run", {{"ladder", c.ladder}}},
          {"seed", c.seed},
          {"deterministic", c.deterministic}};
}

// ---------------------------------------------------------------------------
// Commands

struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunOutcome {
  Json document;
  std::optional<Series> series;
  bool numerical_failure = false;  // non-convergence; the report is still complete
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"primal-solve", "dual-solve", "verify-duality", "manufacture", "gap-study"};
  return names;
}

inline RunOutcome run_command(const std::string& cmd, const ExperimentConfig& c) {
  if (std::find(command_names().begin(), command_names().end(), cmd) == command_names().end())
    throw ValidationError("unknown command '" + cmd + "'");
  const auto t_start = std::chrono::steady_clock::now();
  const SampledCheckOptions checks = check_options(c);
  RunOutcome out;
  Json results;
  const double K = resolve_K(c);

  auto trace_series = [](const DualSolveResult& d) {
    Series s{{"iteration", "J_tilde_star"}, {}};
    for (const auto& [i, v] : d.ascent_trace) s.rows.push_back({static_cast<double>(i), v});
    return s;
  };

  if (cmd == "gap-study") {
    if (c.loads.preset == "none" || c.loads.preset == "zero")
      throw ValidationError("gap-study: loads.preset must name a nonzero preset");
    std::optional<double> amp = c.loads.amplitude;
    Series s{{"h", "gap", "primal", "dual"}, {}};
    Json levels = Json::array();
    std::vector<double> hs, gaps;
    for (int n : c.ladder) {
      GridConfig gc = c.grid;
      gc.dims = {n, n, n};
      ResolvedModel rm = resolve_model(c, gc, amp);
      if (!amp) amp = rm.amplitude;
      const CriticalPointBundle& b = *rm.bundle;
      const ModelConfig& m = rm.model;
      const double Jp = energy(b.u0, m).J;
      const double Jd = J_star(b.dual, m);
      const double h = m.grid.spacing(0);
      const ResidualMap res = extremality_residuals(b.u0, b.dual, m);
      double worst = 0.0;
      for (const auto& [k, v] : res) worst = std::max(worst, v.linf);
      s.rows.push_back({h, std::abs(Jp - Jd), Jp, Jd});
      hs.push_back(h);
      gaps.push_back(std::abs(Jp - Jd));
      levels.push_back({{"dims", n},
                        {"h", h},
                        {"J", detail::num(Jp)},
                        {"J_star", detail::num(Jd)},
                        {"gap", detail::num(std::abs(Jp - Jd))},
                        {"max_extremality_residual", detail::num(worst)}});
    }
    bool positive = true;
    for (double g : gaps) positive = positive && g > 0.0;
    results = {{"amplitude", *amp},
               {"levels", levels},
               {"observed_order", positive ? detail::num(loglog_slope(hs, gaps)) : Json(nullptr)}};
    out.series = s;
  } else {
    ResolvedModel rm = resolve_model(c, c.grid);
    const ModelConfig& m = rm.model;
    const VectorField zero(m.grid.node_count(), Vec3::Zero());
    if (cmd == "primal-solve") {
      const PrimalResult pr = solve_primal(m, zero);
      const BvpResidual br = bvp_residual(pr.u, m);
      results["primal"] = to_json(pr);
      results["bvp_residual"] = {{"interior", detail::num(br.interior)}, {"traction", detail::num(br.traction)}};
      const CSampledResult cs = check_C_sampled(pr.u, m, checks);
      results["feasibility"] = {{"C1", to_json(check_C1(pr.u, m.grid))}, {"C_sampled", {{"pass", cs.pass}, {"heuristic", true}}}};
      out.numerical_failure = !pr.converged;
    } else if (cmd == "dual-solve") {
      const DualSolveResult dr = solve_dual(m, std::nullopt, checks);
      results["dual"] = to_json(dr);
      out.series = trace_series(dr);
      out.numerical_failure = !dr.converged;
    } else if (cmd == "verify-duality") {
      const PrimalResult pr = solve_primal(m, zero);
      const DualSolveResult dr = solve_dual(m, std::nullopt, checks);
      const GapReport gr = gap_report(pr.u, dr.dual_point, m, checks);
      results["primal"] = to_json(pr);
      results["dual"] = to_json(dr);
      results["gap"] = to_json(gr);
      const double slack = c.tol.gap_tol * (1.0 + std::abs(pr.energy.J));
      results["weak_duality"] = {{"J", detail::num(pr.energy.J)},
                                 {"J_tilde_star", detail::num(dr.J_tilde_star)},
                                 {"gap", detail::num(pr.energy.J - dr.J_tilde_star)},
                                 {"holds", pr.energy.J - dr.J_tilde_star >= -slack}};
      out.series = trace_series(dr);
      out.numerical_failure = !pr.converged || !dr.converged;
    } else {  // manufacture
      if (!rm.bundle) throw ValidationError("manufacture: loads.preset must name a preset");
      const CriticalPointBundle& b = *rm.bundle;
      Json log = Json::object();
      for (const auto& [k, v] : b.construction_log) log[k] = detail::num(v);
      results["preset"] = c.loads.preset;
      results["amplitude"] = rm.amplitude;
      results["construction_log"] = log;
      results["gap"] = to_json(gap_report(b.u0, b.dual, m, checks));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  GridConfig echo_grid = c.grid;
  out.document = {{"version", kVersion},
                  {"command", cmd},
                  {"config", config_echo(c, echo_grid, K)},
                  {"results", results},
                  {"timings", {{"wall_seconds", seconds}}}};
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline void emit_json(std::ostream& os, const Json& doc) { os << doc.dump(2) << '\n'; }

inline void emit_csv(std::ostream& os, const Series& s) {
  for (std::size_t i = 0; i < s.columns.size(); ++i) os << (i ? "," : "") << s.columns[i];
  os << '\n' << std::setprecision(17);
  for (const auto& row : s.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

/// The document with the timing block removed, for reproducibility comparisons.
inline Json without_timings(Json doc) {
  doc.erase("timings");
  return doc;
}

}  // namespace elastodual
