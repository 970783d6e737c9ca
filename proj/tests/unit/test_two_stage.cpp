#include <gtest/gtest.h>

#include "nfisac/two_stage.hpp"

using namespace nfisac;

namespace {

struct Case {
  Scenario s;
  DesignContext ctx;
  CMat analog;
};

Case make(std::uint64_t seed, ScenarioConfig cfg = ScenarioConfig::desk()) {
  Case c;
  c.s = generate_scenario(cfg, seed);
  c.ctx = DesignContext::from_scenario(c.s, AccessScheme::Rsma);
  c.analog = heuristic_analog(c.s.user_steering(), c.s.n_rf, Architecture::FullyConnected);
  return c;
}

}  // namespace

TEST(TwoStage, TraceMonotoneAndFeasible) {
  const Case c = make(3);
  const TwoStageResult r = two_stage_optimize(c.ctx, c.analog, OptimizeOptions{});
  ASSERT_NE(r.status, OptimizeStatus::Infeasible);
  ASSERT_EQ(r.inner_traces.size(), 1u);
  const auto& t = r.inner_traces[0];
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(t[i], t[i - 1]);
  EXPECT_GE(r.min_rate, c.s.rate_threshold - 1e-3);
  EXPECT_LE(r.beamformer.product().squaredNorm(), c.s.power_budget * (1 + 1e-6));
  EXPECT_EQ(r.beamformer.analog, c.analog);
  EXPECT_EQ(r.outer_iterations, 0);
  EXPECT_LE(r.conic_solves, OptimizeOptions{}.max_inner + 60);
}

// Rates through the effective channel F^H h equal rates through the product.
TEST(TwoStage, EffectiveChannelConsistency) {
  const Case c = make(4);
  const TwoStageResult r = two_stage_optimize(c.ctx, c.analog, OptimizeOptions{});
  const CMat h = c.ctx.channels;
  const CMat w = r.beamformer.digital / c.ctx.amplitude();
  const CMat eff = c.analog.adjoint() * h;
  const RateReport a = achievable_rates(received_powers(eff, w, 1.0), r.allocation);
  const RateReport b = achievable_rates(received_powers(h, c.analog * w, 1.0), r.allocation);
  for (int k = 0; k < c.ctx.users(); ++k) EXPECT_NEAR(a.totals[k], b.totals[k], 1e-10);
}

// With an identity analog stage the design is the fully digital one.
TEST(TwoStage, IdentityAnalogMatchesFullyDigital) {
  ScenarioConfig cfg = ScenarioConfig::desk();
  cfg.n_tx = 8;
  cfg.n_rf = 8;
  const Case c = make(5, cfg);
  const CMat eye = CMat::Identity(8, 8);
  const TwoStageResult ts = two_stage_optimize(c.ctx, eye, OptimizeOptions{});
  const OptimizeResult fd = optimize_fully_digital(c.ctx, OptimizeOptions{});
  ASSERT_NE(ts.status, OptimizeStatus::Infeasible);
  EXPECT_NEAR(ts.crb.trace / fd.crb.trace, 1.0, 1e-3);
}

TEST(TwoStage, FewerSolvesThanPenaltyLoop) {
  const Case c = make(6);
  const TwoStageResult ts = two_stage_optimize(c.ctx, c.analog, OptimizeOptions{});
  const OptimizeResult fc = pdd_optimize(c.ctx, Architecture::FullyConnected, c.analog, OptimizeOptions{});
  EXPECT_LT(ts.conic_solves, fc.conic_solves);
  // The penalty design searches a superset of the fixed-analog designs.
  const OptimizeResult fc_w =
      pdd_optimize(c.ctx, Architecture::FullyConnected, c.analog, OptimizeOptions{}, &ts.beamformer);
  EXPECT_LE(fc_w.crb.trace, ts.crb.trace * (1 + 1e-6));
}

TEST(TwoStage, RejectsWrongShape) {
  const Case c = make(1);
  EXPECT_THROW(two_stage_optimize(c.ctx, CMat::Ones(3, 2), OptimizeOptions{}), DimensionError);
}
