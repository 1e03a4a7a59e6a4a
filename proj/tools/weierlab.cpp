// weierlab: run surface-synthesis scenarios and verify their residuals.
//
// Exit status: 0 all checks pass, 1 a check failed, 2 invalid configuration,
// 3 numerical singularity.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "weierlab/fields.hpp"
#include "weierlab/scenario.hpp"

namespace {

using namespace weierlab;

void print_summary(const scenario::RunResult& r, bool quiet) {
  if (quiet) return;
  for (const auto& item : r.report.at("checks").items()) {
    const auto& c = item.value();
    std::fprintf(stderr, "  %-4s %-26s max %.3e  tol %.3e\n", c.at("pass").get<bool>() ? "ok" : "FAIL",
                 item.key().c_str(), c.at("max").get<double>(), c.at("tolerance").get<double>());
  }
  for (const auto& w : r.report.at("warnings")) std::fprintf(stderr, "  warning: %s\n", w.get<std::string>().c_str());
  if (r.report.contains("error")) {
    std::fprintf(stderr, "  error: %s\n", r.report["error"]["message"].get<std::string>().c_str());
  }
  std::fprintf(stderr, "status: %s\n", r.report.at("status").get<std::string>().c_str());
}

int execute(const std::string& path, bool artifacts, const std::string& report_override, bool quiet) {
  scenario::ScenarioConfig cfg;
  try {
    cfg = scenario::ScenarioConfig::from_file(path);
  } catch (const Error& e) {
    std::fprintf(stderr, "weierlab: invalid configuration: %s\n", e.what());
    return 2;
  }
  if (!report_override.empty()) cfg.output.report = report_override;

  const auto t0 = std::chrono::steady_clock::now();
  scenario::RunResult r;
  try {
    r = scenario::run(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "weierlab: invalid configuration: %s\n", e.what());
    return 2;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    scenario::write_artifacts(cfg, r, artifacts);
  } catch (const Error& e) {
    std::fprintf(stderr, "weierlab: %s\n", e.what());
    return 1;
  }
  if (cfg.output.report.empty()) std::cout << r.report.dump(2) << '\n';
  print_summary(r, quiet);
  if (!quiet) std::fprintf(stderr, "elapsed: %.3f s\n", secs);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weierlab: generalized Weierstrass surface synthesis with residual verification"};
  app.require_subcommand(1);
  std::size_t n_threads = 0;
  app.add_option("-j,--threads", n_threads, "Data-parallel width (overrides WEIERLAB_THREADS)");

  std::string config, report;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a scenario: report, mesh and curvature tables");
  run->add_option("config", config, "Scenario file (JSON)")->required();
  run->add_option("-r,--report", report, "Report path (overrides output.report)");
  run->add_flag("-q,--quiet", quiet, "No summary on stderr");

  auto* verify = app.add_subcommand("verify", "Run the checks only; no mesh or tables");
  verify->add_option("config", config, "Scenario file (JSON)")->required();
  verify->add_option("-r,--report", report, "Report path (overrides output.report)");
  verify->add_flag("-q,--quiet", quiet, "No summary on stderr");

  auto* presets = app.add_subcommand("presets", "List built-in presets");
  auto* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (n_threads > 0) cgrid::set_threads(n_threads);

  if (*presets) {
    for (const auto& name : fields::preset_names()) {
      const fields::Preset p = fields::make_preset(name, fields::preset_grid(name, 8));
      std::printf("%-12s %s\n", name.c_str(), p.description.c_str());
    }
    return 0;
  }
  if (*version) {
    std::printf("weierlab %s\n", scenario::version().c_str());
    return 0;
  }
  return execute(config, run->parsed(), report, quiet);
}
