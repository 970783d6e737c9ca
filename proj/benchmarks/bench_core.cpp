#include <benchmark/benchmark.h>

#include "nfisac/pdd_optimizer.hpp"

using namespace nfisac;

namespace {

Scenario desk_scenario(int n_tx) {
  ScenarioConfig cfg = ScenarioConfig::desk();
  cfg.n_tx = n_tx;
  return generate_scenario(cfg, 1);
}

}  // namespace

static void BM_FimAssembly(benchmark::State& state) {
  const Scenario s = desk_scenario(static_cast<int>(state.range(0)));
  const int nt = s.geometry.n_tx;
  const CMat r = CMat::Identity(nt, nt) * (s.power_budget / nt);
  for (auto _ : state) {
    FimBundle b = assemble_fim(s.geometry, s.targets, r, s.sensing);
    benchmark::DoNotOptimize(crb_trace(b, s.sensing).trace);
  }
}
BENCHMARK(BM_FimAssembly)->Arg(16)->Arg(64);

static void BM_InnerSolve(benchmark::State& state) {
  const Scenario s = desk_scenario(16);
  const DesignContext ctx = DesignContext::from_scenario(s, AccessScheme::Rsma);
  const CMat eye = CMat::Identity(ctx.n_tx, ctx.n_tx);
  const InnerInputs in = make_inner_inputs(ctx, eye, InnerVariant::FullyDigital, matched_filter_start(ctx),
                                           InnerObjective::Sensing, ctx.rate_threshold);
  for (auto _ : state) {
    const InnerSolution sol = solve_inner(build_inner_problem(in));
    benchmark::DoNotOptimize(sol.x.data());
  }
}
BENCHMARK(BM_InnerSolve)->Unit(benchmark::kMillisecond);

static void BM_AnalogSweep(benchmark::State& state) {
  const int nt = static_cast<int>(state.range(0)), nf = 8, k = 4;
  const CMat f = CMat::Random(nt, nf).unaryExpr([](cplx z) { return z / std::abs(z); });
  const CMat w = CMat::Random(nf, k + 1), target = CMat::Random(nt, k + 1);
  for (auto _ : state) benchmark::DoNotOptimize(update_analog(Architecture::FullyConnected, f, w, target).data());
}
BENCHMARK(BM_AnalogSweep)->Arg(16)->Arg(64);
BENCHMARK_MAIN();
