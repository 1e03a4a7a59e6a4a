#include <benchmark/benchmark.h>

#include "weierlab/geom.hpp"
#include "weierlab/scenario.hpp"
#include "weierlab/sigma.hpp"
#include "weierlab/weier.hpp"

namespace {

using namespace weierlab;
using cgrid::ComplexField;
using cgrid::Grid;

ComplexField test_field(const Grid& g) {
  return ComplexField::from_function(g, [](cplx z) { return std::exp(0.3 * z) / (1.0 + std::norm(z)); });
}

void BM_DzExplicit(benchmark::State& state) {
  const Grid g = Grid::square(2.0, state.range(0));
  const ComplexField f = test_field(g);
  const cgrid::Stencil st{4, cgrid::Scheme::explicit_fd};
  for (auto _ : state) benchmark::DoNotOptimize(cgrid::d_z(f, st));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_DzExplicit)->RangeMultiplier(2)->Range(64, 512);

void BM_DzCompact(benchmark::State& state) {
  const Grid g = Grid::square(2.0, state.range(0));
  const ComplexField f = test_field(g);
  for (auto _ : state) benchmark::DoNotOptimize(cgrid::d_z(f));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_DzCompact)->RangeMultiplier(2)->Range(64, 512);

void BM_BuildImmersion(benchmark::State& state) {
  const Grid g = Grid::square(2.0, state.range(0));
  const fields::SpinorPair sp(
      ComplexField::from_function(g, [](cplx z) { return z / (1.0 + std::norm(z)); }),
      ComplexField::from_function(g, [](cplx z) { return cplx{1.0 / (1.0 + std::norm(z))}; }));
  const auto forms = weier::gwr_integrands(sp, weier::GwrData::cmc(g));
  for (auto _ : state) benchmark::DoNotOptimize(weier::build_immersion(forms, g.base_node()));
}
BENCHMARK(BM_BuildImmersion)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ConservationCurrents(benchmark::State& state) {
  const Grid g = Grid::square(2.0, state.range(0));
  const fields::OmegaField w(ComplexField::from_function(g, [](cplx z) { return z; }));
  const ComplexField rho(g, cplx{1.0}), sig(g, cplx{});
  for (auto _ : state) {
    const auto km = weier::km_matrices(w, rho, sig);
    benchmark::DoNotOptimize(weier::conservation_residual(km));
  }
}
BENCHMARK(BM_ConservationCurrents)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RelaxSweeps(benchmark::State& state) {
  const Grid g = Grid::square(1.0, state.range(0));
  const ComplexField z = ComplexField::from_function(g, [](cplx c) { return c; });
  sigma::RelaxParams prm;
  prm.max_iters = 100;
  prm.theta = 1.0;
  prm.tol_target = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(sigma::relax_solve(sigma::Mode::o3, z, ComplexField(g, cplx{}), prm));
  state.SetItemsProcessed(state.iterations() * 100 * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_RelaxSweeps)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SpherePipeline(benchmark::State& state) {
  const auto cfg = scenario::ScenarioConfig::from_json(
      {{"mode", "cmc"}, {"grid", {{"n", state.range(0)}}}, {"source", {{"preset", "sphere"}}}});
  for (auto _ : state) benchmark::DoNotOptimize(scenario::run(cfg));
}
BENCHMARK(BM_SpherePipeline)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
