#include "weierlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "weierlab/expr.hpp"
#include "weierlab/mesh_io.hpp"

#ifndef WEIERLAB_VERSION
#define WEIERLAB_VERSION "0.0.0"
#endif

namespace weierlab::scenario {

using cgrid::ComplexField;
using cgrid::Grid;
using cgrid::RealField;

std::string version() { return WEIERLAB_VERSION; }

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::classical: return "classical";
    case RunMode::cmc: return "cmc";
    case RunMode::gwr: return "gwr";
    case RunMode::curved: return "curved";
    case RunMode::ernst: return "ernst";
    case RunMode::r8: return "r8";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& s) {
  for (RunMode m : {RunMode::classical, RunMode::cmc, RunMode::gwr, RunMode::curved, RunMode::ernst,
                    RunMode::r8}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown mode '" + s + "' (expected classical, cmc, gwr, curved, ernst or r8)");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Configuration parsing

namespace {

void allow_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      throw ConfigError("unknown key '" + where + "." + item.key() + "'");
    }
  }
}

template <class T>
T get_or(const json& obj, const char* key, T def, const std::string& where) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if constexpr (std::is_same_v<T, std::size_t>) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(where + "." + key + " must be a non-negative integer");
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  } else if constexpr (std::is_same_v<T, int>) {
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  } else {
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  }
  return v.get<T>();
}

cplx parse_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw ConfigError(where + " must be a number or [re, im]");
}

const std::vector<std::string>& expr_keys() {
  static const std::vector<std::string> k = {"omega", "omega2", "psi1", "psi2", "rho",
                                             "sigma", "p",      "g",    "J",    "rho_w"};
  return k;
}

std::set<std::string> preset_provides(const std::string& name) {
  if (name == "sphere" || name == "holo") return {"omega", "psi1", "psi2"};
  if (name == "minimal") return {"psi1", "psi2"};
  if (name == "ernst-demo") return {"omega", "psi1", "psi2", "rho", "sigma"};
  if (name == "curved-demo") return {"omega", "rho", "sigma"};
  throw ConfigError("unknown preset '" + name + "'");
}

std::set<std::string> mode_accepts(RunMode m) {
  switch (m) {
    case RunMode::classical: return {"psi1", "psi2"};
    case RunMode::cmc: return {"omega", "rho"};
    case RunMode::gwr: return {"omega", "rho", "rho_w", "g", "J"};
    case RunMode::curved: return {"omega", "rho"};
    case RunMode::ernst: return {"omega", "rho", "sigma", "p"};
    case RunMode::r8: return {"omega", "omega2", "rho", "sigma"};
  }
  return {};
}

void validate_sources(const ScenarioConfig& c) {
  const std::set<std::string> from_preset =
      c.source.preset ? preset_provides(*c.source.preset) : std::set<std::string>{};
  const auto have = [&](const std::string& k) { return c.source.exprs.count(k) > 0 || from_preset.count(k) > 0; };
  const auto accepted = mode_accepts(c.mode);
  for (const auto& [k, v] : c.source.exprs) {
    if (!accepted.count(k)) throw ConfigError("source." + k + " is not used by mode " + to_string(c.mode));
  }
  const bool solver = c.source.solver.has_value();
  const bool seed = have("omega") || (solver && c.source.solver->boundary);
  const std::string m = "mode " + to_string(c.mode);
  switch (c.mode) {
    case RunMode::classical:
      if (!have("psi1") || !have("psi2")) throw ConfigError(m + " requires psi1 and psi2");
      break;
    case RunMode::cmc:
    case RunMode::r8:
      if (!seed) throw ConfigError(m + " requires omega");
      break;
    case RunMode::gwr:
      if (!have("omega")) throw ConfigError(m + " requires omega");
      if (c.source.exprs.count("g") && c.source.exprs.count("J")) {
        throw ConfigError(m + ": give either g or J, not both");
      }
      break;
    case RunMode::curved:
      if (!have("rho")) throw ConfigError(m + " requires rho");
      if (!seed) throw ConfigError(m + " requires omega or a solver boundary");
      break;
    case RunMode::ernst:
      if (!have("p") && !(have("rho") && have("sigma"))) throw ConfigError(m + " requires p (or rho and sigma)");
      if (c.source.exprs.count("p") && (c.source.exprs.count("rho") || c.source.exprs.count("sigma"))) {
        throw ConfigError(m + ": give either p or rho/sigma, not both");
      }
      if (!seed) throw ConfigError(m + " requires omega or a solver boundary");
      break;
  }
  if (solver && c.mode != RunMode::cmc && c.mode != RunMode::curved && c.mode != RunMode::ernst) {
    throw ConfigError("source.solver is available in cmc, curved and ernst modes only");
  }
  if (c.lax.enabled && c.mode != RunMode::cmc && c.mode != RunMode::gwr && c.mode != RunMode::curved) {
    throw ConfigError("lax is available in cmc, gwr and curved modes only");
  }
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  ScenarioConfig c;
  c.raw = j;
  allow_keys(j, "config", {"mode", "grid", "source", "lax", "output", "thresholds", "sign", "options"});
  if (!j.contains("mode")) throw ConfigError("config.mode is required");
  c.mode = run_mode_from_string(get_or<std::string>(j, "mode", "", "config"));

  if (j.contains("grid")) {
    const json& gj = j.at("grid");
    allow_keys(gj, "grid", {"x_min", "x_max", "y_min", "y_max", "n", "nx", "ny", "order", "scheme"});
    const std::pair<const char*, std::optional<double>*> bounds[] = {
        {"x_min", &c.grid.x_min}, {"x_max", &c.grid.x_max}, {"y_min", &c.grid.y_min}, {"y_max", &c.grid.y_max}};
    for (const auto& [k, slot] : bounds) {
      if (gj.contains(k)) *slot = get_or<double>(gj, k, 0.0, "grid");
    }
    if (gj.contains("n")) c.grid.nx = c.grid.ny = get_or<std::size_t>(gj, "n", 0, "grid");
    if (gj.contains("nx")) c.grid.nx = get_or<std::size_t>(gj, "nx", 0, "grid");
    if (gj.contains("ny")) c.grid.ny = get_or<std::size_t>(gj, "ny", 0, "grid");
    c.grid.stencil.order = get_or<int>(gj, "order", 4, "grid");
    const std::string scheme = get_or<std::string>(gj, "scheme", c.grid.stencil.order == 4 ? "compact" : "explicit", "grid");
    if (scheme == "compact") c.grid.stencil.scheme = cgrid::Scheme::compact;
    else if (scheme == "explicit") c.grid.stencil.scheme = cgrid::Scheme::explicit_fd;
    else throw ConfigError("grid.scheme must be compact or explicit");
  }

  if (j.contains("source")) {
    const json& sj = j.at("source");
    if (!sj.is_object()) throw ConfigError("source must be an object");
    for (const auto& item : sj.items()) {
      const std::string& k = item.key();
      if (k == "preset") {
        c.source.preset = get_or<std::string>(sj, "preset", "", "source");
        preset_provides(*c.source.preset);
      } else if (k == "solver") {
        const json& rj = item.value();
        allow_keys(rj, "source.solver", {"boundary", "init", "theta", "divergence_window", "margin"});
        SolverSpec s;
        if (rj.contains("boundary")) s.boundary = get_or<std::string>(rj, "boundary", "", "source.solver");
        if (rj.contains("init")) s.init = get_or<std::string>(rj, "init", "", "source.solver");
        s.theta = get_or<double>(rj, "theta", s.theta, "source.solver");
        s.divergence_window = get_or<std::size_t>(rj, "divergence_window", s.divergence_window, "source.solver");
        s.margin = get_or<std::size_t>(rj, "margin", s.margin, "source.solver");
        if (!(s.theta > 0.0 && s.theta <= 1.0)) throw ConfigError("source.solver.theta must lie in (0, 1]");
        for (const auto* e : {&s.boundary, &s.init}) {
          if (*e) expr::Expression::parse(**e);
        }
        c.source.solver = s;
      } else if (std::find(expr_keys().begin(), expr_keys().end(), k) != expr_keys().end()) {
        const std::string text = get_or<std::string>(sj, k.c_str(), "", "source");
        expr::Expression::parse(text);
        c.source.exprs[k] = text;
      } else {
        throw ConfigError("unknown key 'source." + k + "'");
      }
    }
  }

  if (j.contains("lax")) {
    const json& lj = j.at("lax");
    allow_keys(lj, "lax", {"enabled", "lambda"});
    c.lax.enabled = get_or<bool>(lj, "enabled", true, "lax");
    if (lj.contains("lambda")) c.lax.lambda = parse_complex(lj.at("lambda"), "lax.lambda");
  }

  if (j.contains("output")) {
    const json& oj = j.at("output");
    allow_keys(oj, "output", {"report", "mesh", "formats", "curvature_csv", "scatter_csv"});
    c.output.report = get_or<std::string>(oj, "report", "", "output");
    c.output.mesh = get_or<std::string>(oj, "mesh", "", "output");
    c.output.curvature_csv = get_or<std::string>(oj, "curvature_csv", "", "output");
    c.output.scatter_csv = get_or<std::string>(oj, "scatter_csv", "", "output");
    if (oj.contains("formats")) {
      const json& f = oj.at("formats");
      if (!f.is_array() || f.empty()) throw ConfigError("output.formats must be a non-empty array");
      c.output.formats.clear();
      for (const auto& e : f) {
        if (!e.is_string()) throw ConfigError("output.formats entries must be strings");
        mesh_io::format_from_string(e.get<std::string>());
        c.output.formats.push_back(e.get<std::string>());
      }
    }
  }

  if (j.contains("thresholds")) {
    const json& tj = j.at("thresholds");
    allow_keys(tj, "thresholds",
               {"closedness_refusal", "tol_constant", "force", "solver_tol", "max_iters", "checks"});
    Thresholds& t = c.thresholds;
    t.closedness_refusal = get_or<double>(tj, "closedness_refusal", t.closedness_refusal, "thresholds");
    t.tol_constant = get_or<double>(tj, "tol_constant", t.tol_constant, "thresholds");
    t.force = get_or<bool>(tj, "force", t.force, "thresholds");
    t.solver_tol = get_or<double>(tj, "solver_tol", t.solver_tol, "thresholds");
    t.max_iters = get_or<std::size_t>(tj, "max_iters", t.max_iters, "thresholds");
    if (!(t.tol_constant > 0.0) || !(t.solver_tol > 0.0) || !(t.closedness_refusal > 0.0)) {
      throw ConfigError("thresholds must be positive");
    }
    if (tj.contains("checks")) {
      const json& cj = tj.at("checks");
      if (!cj.is_object()) throw ConfigError("thresholds.checks must be an object");
      for (const auto& item : cj.items()) {
        if (!item.value().is_number()) throw ConfigError("thresholds.checks." + item.key() + " must be a number");
        t.checks[item.key()] = item.value().get<double>();
      }
    }
  }

  if (j.contains("sign")) {
    const json& sj = j.at("sign");
    allow_keys(sj, "sign", {"epsilon", "branch"});
    c.sign.epsilon = get_or<int>(sj, "epsilon", 1, "sign");
    if (c.sign.epsilon != 1 && c.sign.epsilon != -1) throw ConfigError("sign.epsilon must be +1 or -1");
    if (get_or<std::string>(sj, "branch", "continuity", "sign") != "continuity") {
      throw ConfigError("sign.branch must be 'continuity'");
    }
  }

  if (j.contains("options")) {
    const json& oj = j.at("options");
    allow_keys(oj, "options",
               {"prefactor", "literal_x3_weight", "coupling", "quadrature", "literal_forms", "delta"});
    Options& o = c.options;
    o.prefactor = get_or<double>(oj, "prefactor", o.prefactor, "options");
    o.literal_x3_weight = get_or<bool>(oj, "literal_x3_weight", o.literal_x3_weight, "options");
    o.literal_forms = get_or<bool>(oj, "literal_forms", o.literal_forms, "options");
    o.delta = get_or<double>(oj, "delta", o.delta, "options");
    const std::string cp = get_or<std::string>(oj, "coupling", "imaginary", "options");
    if (cp == "imaginary") o.coupling = weier::Coupling::imaginary;
    else if (cp == "literal") o.coupling = weier::Coupling::literal;
    else throw ConfigError("options.coupling must be imaginary or literal");
    const std::string q = get_or<std::string>(oj, "quadrature", "corrected", "options");
    if (q == "corrected") o.quadrature = cgrid::Quadrature::corrected;
    else if (q == "trapezoid") o.quadrature = cgrid::Quadrature::trapezoid;
    else throw ConfigError("options.quadrature must be corrected or trapezoid");
  }

  validate_sources(c);
  c.grid.stencil.validate(c.make_grid());
  return c;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

Grid ScenarioConfig::make_grid() const {
  const std::size_t nx = grid.nx.value_or(grid.ny.value_or(128));
  const std::size_t ny = grid.ny.value_or(nx);
  Grid base = source.preset ? fields::preset_grid(*source.preset, nx) : Grid::square(1.0, nx);
  const double x0 = grid.x_min.value_or(base.x_min()), x1 = grid.x_max.value_or(base.x_max());
  const double y0 = grid.y_min.value_or(base.y_min()), y1 = grid.y_max.value_or(base.y_max());
  if (!(x1 > x0) || !(y1 > y0)) throw ConfigError("grid bounds must satisfy min < max");
  if (nx < 2 || ny < 2) throw ConfigError("grid needs at least 2 nodes per direction");
  return Grid(x0, x1, y0, y1, nx, ny);
}

std::string ScenarioConfig::hash() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(raw.dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

json node_json(const Grid& g, const Node& n) {
  return json{{"i", n.i}, {"j", n.j}, {"x", g.x(n.i)}, {"y", g.y(n.j)}};
}

RealField pointwise_max(const std::vector<RealField>& fs) {
  RealField r(fs.front().grid, 0.0);
  for (const auto& f : fs) {
    for (std::size_t k = 0; k < f.values.size(); ++k) r.values[k] = std::max(r.values[k], f.values[k]);
  }
  return r;
}

bool is_constant_zero(const ComplexField& f) { return f.max_abs() == 0.0; }

class Runner {
 public:
  explicit Runner(const ScenarioConfig& c)
      : cfg_(c), g_(c.make_grid()), st_(c.grid.stencil), zero_(g_, cplx{}, "0") {}

  RunResult go() {
    RunResult res;
    info_["tolerance_constant"] = cfg_.thresholds.tol_constant;
    std::string status = "pass";
    json error;
    try {
      switch (cfg_.mode) {
        case RunMode::classical: classical(res); break;
        case RunMode::cmc:
        case RunMode::gwr: cmc_gwr(res); break;
        case RunMode::curved: curved(res); break;
        case RunMode::ernst: ernst(res); break;
        case RunMode::r8: r8(res); break;
      }
    } catch (const SingularityError& e) {
      status = "singular";
      error = {{"type", "singularity"}, {"message", e.what()}};
      if (e.node()) error["node"] = node_json(g_, *e.node());
    } catch (const ConvergenceError& e) {
      status = "fail";
      error = {{"type", "convergence"}, {"message", e.what()}};
    } catch (const PreconditionError& e) {
      status = "fail";
      error = {{"type", "precondition"}, {"message", e.what()}, {"residual", e.residual()}};
    }
    bool all = true;
    for (const auto& item : checks_.items()) all = all && item.value().at("pass").get<bool>();
    if (status == "pass" && !all) status = "fail";
    res.exit_code = status == "pass" ? 0 : status == "singular" ? 3 : 1;

    json& r = res.report;
    r["mode"] = to_string(cfg_.mode);
    r["status"] = status;
    r["exit_code"] = res.exit_code;
    r["checks"] = checks_;
    r["info"] = info_;
    r["warnings"] = warnings_;
    if (!error.is_null()) r["error"] = error;
    r["provenance"] = {
        {"config_hash", cfg_.hash()},
        {"artifact_version", version()},
        {"grid",
         {{"x_min", g_.x_min()}, {"x_max", g_.x_max()}, {"y_min", g_.y_min()}, {"y_max", g_.y_max()},
          {"nx", g_.nx()}, {"ny", g_.ny()}}},
        {"stencil_order", st_.order},
        {"scheme", st_.scheme == cgrid::Scheme::compact ? "compact" : "explicit"},
        {"source", cfg_.source.preset ? "preset:" + *cfg_.source.preset : std::string("expressions")},
    };
    return res;
  }

 private:
  // -- report helpers ------------------------------------------------------

  double tol_for(const std::string& name, double def) const {
    const auto it = cfg_.thresholds.checks.find(name);
    return it == cfg_.thresholds.checks.end() ? def : it->second;
  }

  void record(const std::string& name, const std::string& op, double max, double l2, std::size_t flagged,
              double tol, json extra = json::object()) {
    json c = {{"max", max}, {"l2", l2}, {"nodes_flagged", flagged}, {"tolerance", tol}, {"op", op},
              {"pass", std::isfinite(max) && max <= tol}};
    for (const auto& item : extra.items()) c[item.key()] = item.value();
    checks_[name] = c;
  }

  void field_check(const std::string& name, const std::string& op, const RealField& r, double tol_default,
                   std::size_t band = 0) {
    const double tol = tol_for(name, tol_default);
    const Grid& g = r.grid;
    double mx = 0.0;
    Node arg{};
    std::vector<double> sq;
    std::size_t flagged = 0;
    sq.reserve(r.values.size());
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      const Node n = g.node(k);
      if (n.i < band || n.j < band || n.i + band >= g.nx() || n.j + band >= g.ny()) continue;
      const double v = r.values[k];
      sq.push_back(v * v);
      if (!(v <= tol)) ++flagged;
      if (!(v <= mx)) {
        mx = v;
        arg = n;
      }
    }
    const double l2 = std::sqrt(g.hx() * g.hy() * cgrid::pairwise_sum(sq));
    record(name, op, mx, l2, flagged, tol, {{"band", band}, {"argmax", node_json(g, arg)}});
  }

  void scalar_check(const std::string& name, const std::string& op, double v, double tol_default) {
    const double tol = tol_for(name, tol_default);
    record(name, op, v, v, std::isfinite(v) && v <= tol ? 0 : 1, tol);
  }

  double tol_h() const { return cgrid::tolerance(g_, solver_used_ ? 2 : st_.order, cfg_.thresholds.tol_constant); }

  // -- inputs ---------------------------------------------------------------

  const fields::Preset* preset_on(const Grid& g) {
    if (!cfg_.source.preset) return nullptr;
    for (const auto& [grid, p] : presets_) {
      if (grid == g) return &p;
    }
    presets_.emplace_back(g, fields::make_preset(*cfg_.source.preset, g, st_));
    return &presets_.back().second;
  }

  std::optional<ComplexField> expr_field(const std::string& key, const Grid& g) const {
    const auto it = cfg_.source.exprs.find(key);
    if (it == cfg_.source.exprs.end()) return std::nullopt;
    return expr::Expression::parse(it->second).evaluate(g, key);
  }
  std::optional<ComplexField> expr_field(const std::string& key) const { return expr_field(key, g_); }

  std::optional<ComplexField> field(const std::string& key, const Grid& g) {
    if (auto e = expr_field(key, g)) return e;
    const fields::Preset* p = preset_on(g);
    if (!p) return std::nullopt;
    if (key == "omega" && p->omega) return p->omega->omega();
    if (key == "psi1" && p->spinors) return p->spinors->psi1;
    if (key == "psi2" && p->spinors) return p->spinors->psi2;
    if (key == "rho" && p->rho) return p->rho;
    if (key == "sigma" && p->sigma) return p->sigma;
    return std::nullopt;
  }
  std::optional<ComplexField> field(const std::string& key) { return field(key, g_); }

  ComplexField field_or(const std::string& key, cplx def) {
    if (auto f = field(key)) return *f;
    return ComplexField(g_, def, key);
  }

  using PotentialOn = std::function<std::optional<sigma::HarmonicPotential>(const Grid&)>;

  /// omega from the source, or from the Dirichlet solver. With a margin the
  /// solve runs on a grid extended by `margin` nodes per side at the same
  /// spacing and the result is cropped, so that corner incompatibilities of
  /// the boundary data stay outside the reported domain.
  fields::OmegaField acquire_omega(sigma::Mode mode, const PotentialOn& potential_on) {
    if (!cfg_.source.solver) return fields::OmegaField(*field("omega"));
    const SolverSpec& s = *cfg_.source.solver;
    const std::size_t m = s.margin;
    const auto dm = static_cast<double>(m);
    const Grid ge(g_.x_min() - dm * g_.hx(), g_.x_max() + dm * g_.hx(), g_.y_min() - dm * g_.hy(),
                  g_.y_max() + dm * g_.hy(), g_.nx() + 2 * m, g_.ny() + 2 * m);
    const ComplexField boundary =
        s.boundary ? expr::Expression::parse(*s.boundary).evaluate(ge, "boundary") : *field("omega", ge);
    const ComplexField init = s.init ? expr::Expression::parse(*s.init).evaluate(ge, "init") : boundary;
    sigma::RelaxParams p;
    p.max_iters = cfg_.thresholds.max_iters;
    p.theta = s.theta;
    p.tol_target = cfg_.thresholds.solver_tol;
    p.divergence_window = s.divergence_window;
    solver_used_ = true;
    const sigma::RelaxResult r = sigma::relax_solve(mode, boundary, init, p, potential_on(ge));
    info_["solver"] = {{"mode", sigma::to_string(mode)},
                       {"iterations", r.iterations},
                       {"residual", r.residual},
                       {"converged", r.converged},
                       {"theta", p.theta},
                       {"margin", m}};
    scalar_check("solver_residual", "sigma::relax_solve", r.residual, p.tol_target);
    info_["continuous_check_order"] = 2;
    if (m == 0) return r.omega;
    std::vector<cplx> v(g_.size());
    for (std::size_t j = 0; j < g_.ny(); ++j) {
      for (std::size_t i = 0; i < g_.nx(); ++i) v[g_.index(i, j)] = r.omega.omega()(i + m, j + m);
    }
    return fields::OmegaField(ComplexField(g_, std::move(v), "omega"));
  }

  // -- shared stages --------------------------------------------------------

  void km_checks(const weier::KM& km, const std::string& op) {
    field_check("conservation", "weier::conservation_residual(" + op + ")", weier::conservation_residual(km, st_),
                tol_h());
    scalar_check("km_symmetry", "weier::km_symmetry_residual", summarize(weier::km_symmetry_residual(km)).max,
                 1e-12);
  }

  std::optional<weier::Immersion> surface(const weier::OneFormSet& forms, const std::string& op) {
    field_check("closedness", "weier::OneFormSet::closedness(" + op + ")", pointwise_max(forms.closedness(st_)),
                tol_h());
    scalar_check("realness", "weier::OneFormSet::realness_defect", forms.realness_defect(), 1e-12);
    weier::ImmersionOptions opt;
    opt.closedness_threshold = cfg_.thresholds.closedness_refusal;
    opt.force = cfg_.thresholds.force;
    opt.quadrature = cfg_.options.quadrature;
    opt.stencil = st_;
    weier::Immersion im;
    try {
      im = weier::build_immersion(forms, g_.base_node(), opt);
    } catch (const PreconditionError& e) {
      warnings_.push_back(std::string("immersion not built: ") + e.what());
      return std::nullopt;
    }
    im.mode = to_string(cfg_.mode);
    for (const auto& w : im.warnings) warnings_.push_back(w);
    scalar_check("path_independence", "weier::build_immersion", im.path_deviation, tol_h());
    scalar_check("imaginary_part", "weier::build_immersion", im.imag_max, 1e-10);
    info_["immersion"] = {{"dim", im.dim()}, {"base", node_json(g_, im.base)}, {"closedness", im.closedness}};
    return im;
  }

  struct GeometryExpect {
    std::optional<ComplexField> u;  ///< metric expected to be (prefactor u)^2 |dz|^2
    bool constant_H = false;
    bool umbilic = false;
    bool minimal = false;
  };

  void geometry(RunResult& res, const weier::Immersion& im, const GeometryExpect& ex) {
    const std::size_t band = st_.radius();
    const geom::MetricField m = geom::first_form(im, st_);
    res.metric = m;
    if (ex.u) {
      field_check("conformality", "geom::first_form", m.defect, 1e-3, band);
      const double c = cfg_.options.prefactor;
      std::vector<double> rel(g_.size());
      for (std::size_t k = 0; k < g_.size(); ++k) {
        const double want = c * c * std::norm((*ex.u)[k]);
        rel[k] = std::abs(m.factor.values[k] - want) / want;
      }
      field_check("metric_factor", "geom::first_form", RealField(g_, std::move(rel)), 1e-3, band);
    } else {
      info_["conformality_defect"] = cgrid::summarize(m.defect, band).interior_max;
    }
    if (!m.degenerate.empty()) warnings_.push_back(std::to_string(m.degenerate.size()) + " degenerate metric nodes");
    if (im.dim() != 3) return;

    const geom::CurvatureField cf = geom::curvatures_from_mesh(im, st_);
    res.curvature = cf;
    const geom::WeingartenReport wr = geom::weingarten_probe(cf);
    res.weingarten = wr;
    info_["weingarten"] = {
        {"K_mean", wr.K_mean},
        {"H_mean", wr.H_mean},
        {"K_spread", wr.K_spread},
        {"H_spread", wr.H_spread},
        {"linear", {{"terms", wr.linear.terms}, {"coeffs", wr.linear.coeffs}, {"rms", wr.linear.rms}}},
        {"quadratic", {{"terms", wr.quadratic.terms}, {"coeffs", wr.quadratic.coeffs}, {"rms", wr.quadratic.rms}}},
    };
    if (ex.u) {
      const RealField Ku = geom::gauss_from_u(*ex.u * cplx{cfg_.options.prefactor, 0.0}, st_);
      std::vector<double> d(g_.size());
      for (std::size_t k = 0; k < g_.size(); ++k) d[k] = std::abs(Ku.values[k] - cf.K.values[k]);
      field_check("gauss_consistency", "geom::gauss_from_u", RealField(g_, std::move(d)), 10.0 * tol_h(), band);
    }
    if (ex.constant_H) scalar_check("mean_curvature_constancy", "geom::curvatures_from_mesh", wr.H_spread, 1e-2);
    if (ex.umbilic) {
      std::vector<double> d(g_.size());
      for (std::size_t k = 0; k < g_.size(); ++k) {
        const double K = cf.K.values[k], H = cf.H.values[k];
        d[k] = std::abs(H * H - K) / std::abs(K);
      }
      field_check("umbilic_relation", "geom::curvatures_from_mesh", RealField(g_, std::move(d)), 2e-2, band);
    }
    if (ex.minimal) {
      field_check("mean_curvature_zero", "geom::curvatures_from_mesh", cgrid::abs(ComplexField(g_, std::vector<cplx>(cf.H.values.begin(), cf.H.values.end()))),
                  1e-3, band);
    }
  }

  void lax(const fields::OmegaField& w, const ComplexField& rho) {
    if (!cfg_.lax.enabled) return;
    const sigma::LaxSelection sel = sigma::select_lax_variant(64, st_);
    json variants = json::object();
    for (const auto& [v, r] : sel.residuals) variants[v.name()] = r;
    const sigma::LaxData lx = sigma::LaxData::make(rho, cfg_.lax.lambda, st_);
    json here = json::object();
    RealField selected;
    for (const auto& v : sigma::lax_variants()) {
      const auto [U, V] = sigma::lax_matrices(w, lx, v, st_, cfg_.options.delta);
      RealField r = sigma::lax_residual(U, V, st_);
      here[v.name()] = cgrid::summarize(r, st_.radius()).interior_max;
      if (v == sel.selected) selected = std::move(r);
    }
    info_["lax"] = {{"selected", sel.selected.name()},
                    {"reference_residuals", variants},
                    {"residuals", here},
                    {"lambda", {cfg_.lax.lambda.real(), cfg_.lax.lambda.imag()}},
                    {"branch_flags", lx.branch_flags.size()}};
    field_check("lax_compatibility", "sigma::lax_residual(" + sel.selected.name() + ")", selected, tol_h(),
                st_.radius());
  }

  // -- modes -----------------------------------------------------------------

  void classical(RunResult& res) {
    const fields::SpinorPair sp(*field("psi1"), *field("psi2"));
    const double a1 = cgrid::summarize(cgrid::abs(cgrid::d_zbar(sp.psi1.conj(), st_))).max;
    const double a2 = cgrid::summarize(cgrid::abs(cgrid::d_zbar(sp.psi2, st_))).max;
    info_["analyticity"] = {{"conj_psi1", a1}, {"psi2", a2}};
    if (a1 > tol_h()) warnings_.push_back("conj(psi1) is not analytic (max |d_zbar| = " + std::to_string(a1) + ")");
    if (a2 > tol_h()) warnings_.push_back("psi2 is not analytic (max |d_zbar| = " + std::to_string(a2) + ")");
    const auto forms = weier::classical_integrands(sp, cfg_.options.prefactor);
    res.density = cgrid::abs(fields::u_of(sp));
    if (auto im = surface(forms, "classical_integrands")) {
      GeometryExpect ex;
      ex.u = fields::u_of(sp);
      ex.minimal = true;
      geometry(res, *im, ex);
      res.immersion = std::move(*im);
    }
  }

  void cmc_gwr(RunResult& res) {
    const bool gwr = cfg_.mode == RunMode::gwr;
    const fields::OmegaField w = acquire_omega(sigma::Mode::o3, [](const Grid&) { return std::optional<sigma::HarmonicPotential>{}; });
    field_check("sigma", "sigma::sigma_residual", cgrid::abs(sigma::sigma_residual(w, st_)), tol_h());
    const fields::SpinorPair sp = fields::psi_of_omega(w, zero_, cfg_.sign, st_, cfg_.options.delta);
    const ComplexField u = fields::u_of(sp);
    res.density = cgrid::abs(u);

    const fields::OmegaField back = fields::omega_of(sp, cfg_.options.delta);
    std::vector<double> rt(g_.size());
    for (std::size_t k = 0; k < g_.size(); ++k) {
      rt[k] = std::abs(back.omega()[k] - w.omega()[k]) / (1.0 + std::abs(w.omega()[k]));
    }
    field_check("omega_roundtrip", "fields::omega_of", RealField(g_, std::move(rt)), 1e-10);
    field_check("gks", "fields::gks_residual", pointwise_max_gks(sp, u), tol_h());
    field_check("T_identity", "fields::T_bilinear",
                cgrid::abs(fields::T_of(w, st_) + cplx{2.0, 0.0} * fields::T_bilinear(sp, st_)), tol_h());

    weier::GwrData gd = weier::GwrData::cmc(g_);
    bool mixing = false;
    if (gwr) {
      if (auto rw = expr_field("rho_w")) gd.rho_w = *rw;
      if (auto J = expr_field("J")) {
        gd = weier::GwrData{gd.rho_w, weier::GwrData::from_J(*J, u).g, *J};
        field_check("J_analyticity", "weier::GwrData::J_analyticity", gd.J_analyticity(st_), tol_h());
      } else if (auto gg = expr_field("g")) {
        gd.g = *gg;
      }
      mixing = !is_constant_zero(gd.g);
      const bool cmc_weight = (gd.rho_w - ComplexField(g_, cplx{0.0, 1.0})).max_abs() == 0.0;
      if (cmc_weight) {
        const auto c17 = weier::constraint_residual_17(sp, gd.g, st_);
        field_check("constraint_17", "weier::constraint_residual_17",
                    pointwise_max({cgrid::abs(c17[0]), cgrid::abs(c17[1]), cgrid::abs(c17[2])}), tol_h());
      }
      weier::GwrOptions go{cfg_.options.prefactor, cfg_.options.literal_x3_weight};
      const auto c11 = weier::constraint_residual_11(sp, gd, go, st_);
      info_["constraint_11"] = {cgrid::summarize(cgrid::abs(c11[0])).max, cgrid::summarize(cgrid::abs(c11[1])).max,
                                cgrid::summarize(cgrid::abs(c11[2])).max};
    }

    const ComplexField rho = field_or("rho", cplx{0.25, 0.0});
    const weier::KM km = weier::km_matrices(w, rho, zero_, st_);
    km_checks(km, "km_matrices");
    const weier::KmConsistency kc = weier::km_consistency_residual(w, sp, rho, zero_, st_);
    field_check("km_consistency", "weier::km_consistency_residual", pointwise_max({kc.K, kc.M}), tol_h());
    info_["km_consistency_flagged"] = kc.flagged(tol_h());
    if (cfg_.options.literal_forms) literal_info(sp, w, rho, zero_);

    lax(w, rho);

    const auto forms =
        weier::gwr_integrands(sp, gd, {cfg_.options.prefactor, cfg_.options.literal_x3_weight});
    if (auto im = surface(forms, "gwr_integrands")) {
      GeometryExpect ex;
      if (!mixing) {
        ex.u = u;
        ex.constant_H = true;
        // Holomorphic or antiholomorphic omega covers the round sphere.
        const double dzb = cgrid::summarize(cgrid::abs(cgrid::d_zbar(w.omega(), st_))).max;
        const double dz = cgrid::summarize(cgrid::abs(cgrid::d_z(w.omega(), st_))).max;
        ex.umbilic = dzb <= tol_h() || dz <= tol_h();
      }
      geometry(res, *im, ex);
      res.immersion = std::move(*im);
    }
  }

  RealField pointwise_max_gks(const fields::SpinorPair& sp, const ComplexField& u) {
    const fields::GksResidual r = fields::gks_residual(sp, u, st_);
    return pointwise_max({r.first_a, r.second_a, r.first_b, r.second_b});
  }

  void literal_info(const fields::SpinorPair& sp, const fields::OmegaField& w, const ComplexField& rho,
                    const ComplexField& sig) {
    const weier::LiteralDiscrepancy d = weier::literal_discrepancy(sp, w, rho, sig, st_);
    json j = json::array();
    for (std::size_t a = 0; a < 3; ++a) {
      j.push_back({{"closedness", d.closedness[a]},
                   {"realness", d.realness[a]},
                   {"ratio", {d.ratio[a].real(), d.ratio[a].imag()}},
                   {"vs_matrix", d.vs_matrix[a]}});
    }
    info_["literal_forms"] = j;
  }

  void curved(RunResult& res) {
    const ComplexField rho = *field("rho");
    const sigma::HarmonicPotential pot(rho, zero_);
    field_check("rho_harmonic", "cgrid::harmonic_residual", cgrid::harmonic_residual(rho, st_),
                cgrid::tolerance(g_, st_.order, cfg_.thresholds.tol_constant));
    const fields::OmegaField w = acquire_omega(sigma::Mode::curved, [this](const Grid& g) {
      return std::optional<sigma::HarmonicPotential>(sigma::HarmonicPotential(*field("rho", g), ComplexField(g, cplx{})));
    });
    field_check("curved", "sigma::curved_residual", cgrid::abs(sigma::curved_residual(w, rho, st_, cfg_.options.delta)),
                tol_h());
    const ComplexField h2 = sigma::curved_h2(w, rho, st_, cfg_.options.delta);
    const fields::SpinorPair s0 = fields::psi_of_omega(w, zero_, cfg_.sign, st_, cfg_.options.delta);
    const fields::SpinorPair sp(s0.psi1, s0.psi2, h2.conj(), h2);
    res.density = cgrid::abs(fields::u_of(sp));
    field_check("gks", "fields::gks_residual", pointwise_max_gks(sp, fields::u_of(sp)), tol_h());

    const weier::KM km = weier::km_matrices(w, rho, zero_, st_);
    km_checks(km, "km_matrices");
    lax(w, rho);
    if (auto im = surface(weier::extract_forms(km), "extract_forms")) {
      geometry(res, *im, {});
      res.immersion = std::move(*im);
    }
  }

  void ernst(RunResult& res) {
    std::optional<sigma::HarmonicPotential> pot;
    const auto potential_on = [this](const Grid& g) {
      if (auto p = expr_field("p", g)) return std::optional<sigma::HarmonicPotential>(sigma::HarmonicPotential::from_p(*p));
      return std::optional<sigma::HarmonicPotential>(sigma::HarmonicPotential(*field("rho", g), *field("sigma", g)));
    };
    pot = potential_on(g_);
    field_check("potential_harmonic", "sigma::HarmonicPotential::harmonic_residual", pot->harmonic_residual(st_),
                cgrid::tolerance(g_, st_.order, cfg_.thresholds.tol_constant));
    const fields::OmegaField w = acquire_omega(sigma::Mode::ernst, potential_on);
    const ComplexField f = sigma::ernst_f(*pot, w, st_, cfg_.options.delta);
    field_check("ernst", "sigma::ernst_residual", cgrid::abs(sigma::ernst_residual(w, *pot, st_, cfg_.options.delta)),
                tol_h());
    const fields::SpinorPair s0 = fields::psi_of_omega(w, zero_, cfg_.sign, st_, cfg_.options.delta);
    const fields::ErnstGauge eg = fields::ernst_gauge(s0, w, f, st_, cfg_.options.delta);
    res.density = cgrid::abs(eg.u);
    scalar_check("h_identity", "fields::ernst_gauge", cgrid::summarize(eg.h_identity).max, 1e-12);
    field_check("gks", "fields::gks_residual", pointwise_max_gks(eg.spinors, eg.u), tol_h());
    field_check("T_evolution", "fields::T_evolution_residual",
                fields::T_evolution_residual(fields::T_of(w, st_), w, f, eg.u, st_, cfg_.options.delta), tol_h());

    const weier::KM km = weier::km_matrices(w, pot->rho(), pot->sigma(), st_);
    km_checks(km, "km_matrices");
    if (cfg_.options.literal_forms) literal_info(eg.spinors, w, pot->rho(), pot->sigma());
    if (auto im = surface(weier::extract_forms(km), "extract_forms")) {
      geometry(res, *im, {});
      res.immersion = std::move(*im);
    }
  }

  void r8(RunResult& res) {
    const fields::OmegaField w1(*field("omega"));
    const fields::OmegaField w2(field_or("omega2", cplx{}));
    const ComplexField rho = field_or("rho", cplx{1.0, 0.0});
    const ComplexField sig = field_or("sigma", cplx{});
    const weier::KM km = weier::km_matrices(w1, w2, rho, sig, cfg_.options.coupling, st_);
    km_checks(km, "km_matrices(3x3)");
    const weier::OneFormSet forms = weier::extract_forms(km);

    if (is_constant_zero(w2.omega()) && is_constant_zero(sig)) {
      // Embedded 2x2 case: the first three Gell-Mann forms are the Pauli
      // forms scaled by (-1/4, -1/4, 1/4).
      const weier::OneFormSet f3 = weier::extract_forms(weier::km_matrices_commutator(w1, rho, sig, st_));
      const std::array<double, 3> scale{-0.25, -0.25, 0.25};
      double worst = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t k = 0; k < g_.size(); ++k) {
          worst = std::max(worst, std::abs(forms.forms[a].F[k] - scale[a] * f3.forms[a].F[k]));
          worst = std::max(worst, std::abs(forms.forms[a].G[k] - scale[a] * f3.forms[a].G[k]));
        }
      }
      scalar_check("embedding_2x2", "weier::extract_forms", worst, 1e-8);
    }
    if (auto im = surface(forms, "extract_forms(3x3)")) {
      geometry(res, *im, {});
      res.immersion = std::move(*im);
    }
  }

  const ScenarioConfig& cfg_;
  Grid g_;
  cgrid::Stencil st_;
  ComplexField zero_;
  std::vector<std::pair<Grid, fields::Preset>> presets_;
  bool solver_used_ = false;
  json checks_ = json::object();
  json info_ = json::object();
  json warnings_ = json::array();
};

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace

RunResult run(const ScenarioConfig& cfg) { return Runner(cfg).go(); }

void write_curvature_csv(std::ostream& os, const RunResult& r) {
  if (!r.curvature || !r.metric) throw Error("no curvature data to write");
  const Grid& g = r.curvature->K.grid;
  os << "node,x,y,K,H,u,defect\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Node n = g.node(k);
    const double u = r.density ? r.density->values[k] : std::sqrt(r.metric->factor.values[k]);
    os << k << ',' << fmt9(g.x(n.i)) << ',' << fmt9(g.y(n.j)) << ',' << fmt9(r.curvature->K.values[k]) << ','
       << fmt9(r.curvature->H.values[k]) << ',' << fmt9(u) << ',' << fmt9(r.metric->defect.values[k]) << '\n';
  }
}

void write_scatter_csv(std::ostream& os, const RunResult& r) {
  if (!r.weingarten) throw Error("no curvature data to write");
  os << "K,H\n";
  for (const auto& [K, H] : r.weingarten->scatter) os << fmt9(K) << ',' << fmt9(H) << '\n';
}

void write_artifacts(const ScenarioConfig& cfg, const RunResult& r, bool artifacts) {
  const auto open = [](const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    return os;
  };
  if (!cfg.output.report.empty()) {
    std::ofstream os = open(cfg.output.report);
    os << r.report.dump(2) << '\n';
  }
  if (!artifacts) return;
  if (!cfg.output.mesh.empty() && r.immersion) {
    for (const auto& f : cfg.output.formats) {
      const mesh_io::Format fmt = mesh_io::format_from_string(f);
      mesh_io::write_mesh(cfg.output.mesh + mesh_io::extension(fmt), *r.immersion, fmt);
    }
  }
  if (!cfg.output.curvature_csv.empty() && r.curvature) {
    std::ofstream os = open(cfg.output.curvature_csv);
    write_curvature_csv(os, r);
  }
  if (!cfg.output.scatter_csv.empty() && r.weingarten) {
    std::ofstream os = open(cfg.output.scatter_csv);
    write_scatter_csv(os, r);
  }
}

}  // namespace weierlab::scenario
