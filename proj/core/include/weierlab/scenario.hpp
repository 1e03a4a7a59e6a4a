#pragma once

// Scenario runner: configuration, pipeline orchestration per mode, residual
// report and artifact export.
//
// A configuration is one JSON object:
//
//   {
//     "mode": "cmc",                      classical | cmc | gwr | curved | ernst | r8
//     "grid": {"x_min": -2, "x_max": 2, "y_min": -2, "y_max": 2,
//              "nx": 128, "ny": 128, "order": 4, "scheme": "compact"},
//     "source": {"preset": "sphere", "omega": "z", "rho": "0.25", ...,
//                "solver": {"boundary": "z", "init": "z", "theta": 0.7}},
//     "lax": {"enabled": true, "lambda": [2, 0]},
//     "output": {"report": "r.json", "mesh": "surface", "formats": ["obj"],
//                "curvature_csv": "k.csv", "scatter_csv": "kh.csv"},
//     "thresholds": {"closedness_refusal": 1e-4, "tol_constant": 10,
//                    "solver_tol": 1e-8, "max_iters": 10000, "checks": {"gks": 1e-6}},
//     "sign": {"epsilon": 1, "branch": "continuity"},
//     "options": {"prefactor": 1, "coupling": "imaginary", ...}
//   }
//
// Unknown keys are rejected so that typos do not silently fall back to
// defaults.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "weierlab/geom.hpp"
#include "weierlab/sigma.hpp"
#include "weierlab/weier.hpp"

namespace weierlab::scenario {

using nlohmann::json;

std::string version();

enum class RunMode { classical, cmc, gwr, curved, ernst, r8 };
std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct GridSpec {
  std::optional<double> x_min, x_max, y_min, y_max;
  std::optional<std::size_t> nx, ny;
  cgrid::Stencil stencil{};
};

struct SolverSpec {
  std::optional<std::string> boundary;  ///< defaults to the omega seed
  std::optional<std::string> init;      ///< defaults to the boundary expression
  double theta = 0.7;
  std::size_t divergence_window = 50;
  std::size_t margin = 0;  ///< extra nodes per side solved for and cropped
};

struct SourceSpec {
  std::optional<std::string> preset;
  /// Expressions keyed by field: omega, omega2, psi1, psi2, rho, sigma, p, g, J, rho_w.
  std::map<std::string, std::string> exprs;
  std::optional<SolverSpec> solver;
};

struct LaxSpec {
  bool enabled = false;
  cplx lambda{2.0, 0.0};
};

struct OutputSpec {
  std::string report;  ///< empty: report goes to stdout only
  std::string mesh;    ///< path stem; the format extension is appended
  std::vector<std::string> formats{"obj"};
  std::string curvature_csv, scatter_csv;
};

struct Thresholds {
  double closedness_refusal = 1e-4;
  double tol_constant = 10.0;
  bool force = false;
  double solver_tol = 1e-8;
  std::size_t max_iters = 10000;
  std::map<std::string, double> checks;  ///< per-check tolerance overrides
};

struct Options {
  double prefactor = 1.0;
  bool literal_x3_weight = false;
  weier::Coupling coupling = weier::Coupling::imaginary;
  cgrid::Quadrature quadrature = cgrid::Quadrature::corrected;
  bool literal_forms = false;
  double delta = fields::kSingularDelta;
};

struct ScenarioConfig {
  RunMode mode = RunMode::cmc;
  GridSpec grid;
  SourceSpec source;
  LaxSpec lax;
  OutputSpec output;
  Thresholds thresholds;
  fields::SignChoice sign;
  Options options;
  json raw;  ///< the validated input, used for the provenance hash

  /// Throws ConfigError on unknown keys, wrong types or missing inputs.
  static ScenarioConfig from_json(const json& j);
  static ScenarioConfig from_file(const std::string& path);

  cgrid::Grid make_grid() const;
  /// FNV-1a 64 of the canonical (key-sorted, compact) JSON text.
  std::string hash() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

struct RunResult {
  json report;
  int exit_code = 0;  ///< 0 pass, 1 check failure, 3 numerical singularity
  std::optional<weier::Immersion> immersion;
  std::optional<geom::CurvatureField> curvature;
  std::optional<geom::MetricField> metric;
  std::optional<cgrid::RealField> density;  ///< u for the curvature table
  std::optional<geom::WeingartenReport> weingarten;
};

/// Runs the pipeline of the configured mode. Configuration problems detected
/// while assembling inputs raise ConfigError; numerical failures are recorded
/// in the report.
RunResult run(const ScenarioConfig& cfg);

/// Writes the report (always), and with `artifacts` the mesh and CSV files.
void write_artifacts(const ScenarioConfig& cfg, const RunResult& r, bool artifacts);

void write_curvature_csv(std::ostream& os, const RunResult& r);
void write_scatter_csv(std::ostream& os, const RunResult& r);

}  // namespace weierlab::scenario
