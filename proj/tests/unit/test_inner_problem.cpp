#include <gtest/gtest.h>

#include "nfisac/precoder_mm.hpp"

using namespace nfisac;

namespace {

struct Fixture {
  Scenario s;
  DesignContext ctx;
  CMat start;
};

Fixture desk(std::uint64_t seed, AccessScheme scheme = AccessScheme::Rsma) {
  Fixture f;
  f.s = generate_scenario(ScenarioConfig::desk(), seed);
  f.ctx = DesignContext::from_scenario(f.s, scheme);
  f.start = matched_filter_start(f.ctx);
  return f;
}

}  // namespace

TEST(InnerProblem, BlockCensus) {
  const Fixture f = desk(1);
  const CMat eye = CMat::Identity(f.ctx.n_tx, f.ctx.n_tx);
  const InnerInputs in = make_inner_inputs(f.ctx, eye, InnerVariant::FullyDigital, f.start,
                                           InnerObjective::Sensing, f.ctx.rate_threshold);
  const InnerProblem p = build_inner_problem(in);
  const int k = f.ctx.users(), m = 2, nt = f.ctx.n_tx;
  // fim, lift, power, per-user common and private cones, c >= 0
  EXPECT_EQ(p.program.num_blocks(), 3 + 2 * k + 1);
  EXPECT_EQ(p.program.block(0).dim, 4 * m);
  EXPECT_EQ(p.program.block(2).dim, 1 + 2 * nt * (k + 1));
  EXPECT_EQ(p.layout.streams, k + 1);
}

TEST(InnerProblem, SdmaDropsCommonStream) {
  const Fixture f = desk(1, AccessScheme::Sdma);
  CMat start = f.start;
  start.col(0).setZero();
  const CMat eye = CMat::Identity(f.ctx.n_tx, f.ctx.n_tx);
  const InnerInputs in = make_inner_inputs(f.ctx, eye, InnerVariant::FullyDigital, start,
                                           InnerObjective::Sensing, f.ctx.rate_threshold);
  const InnerProblem p = build_inner_problem(in);
  EXPECT_EQ(p.layout.first_stream, 1);
  const InnerSolution sol = solve_inner(p);
  ASSERT_TRUE(sol.raw.ok());
  EXPECT_EQ(sol.x.col(0).norm(), 0.0);
}

TEST(InnerProblem, PenaltyVariantsNeedTarget) {
  const Fixture f = desk(2);
  const CMat eye = CMat::Identity(f.ctx.n_tx, f.ctx.n_tx);
  InnerInputs in = make_inner_inputs(f.ctx, eye, InnerVariant::FullyConnected, f.start, InnerObjective::Sensing,
                                     f.ctx.rate_threshold);
  EXPECT_ANY_THROW(build_inner_problem(in));
  in.penalty_target = f.start;
  in.rho = 0.0;
  EXPECT_ANY_THROW(build_inner_problem(in));
}

// One surrogate step from a rate-feasible point: power kept, the surrogate
// rates bound the true ones from below, and the CRB does not increase.
TEST(InnerProblem, SurrogateStepIsConservative) {
  for (std::uint64_t seed : {1u, 3u}) {
    const Fixture f = desk(seed);
    const CMat eye = CMat::Identity(f.ctx.n_tx, f.ctx.n_tx);
    ASSERT_GE(min_rate(f.ctx, f.start), f.ctx.rate_threshold);
    const InnerInputs in = make_inner_inputs(f.ctx, eye, InnerVariant::FullyDigital, f.start,
                                             InnerObjective::Sensing, f.ctx.rate_threshold);
    const InnerSolution sol = solve_inner(build_inner_problem(in));
    ASSERT_TRUE(sol.raw.ok()) << conic_status_name(sol.raw.status) << " seed " << seed << " it " << sol.raw.iterations;
    EXPECT_LE(sol.x.squaredNorm(), 1.0 + 1e-6);
    EXPECT_GE(min_rate(f.ctx, sol.x), f.ctx.rate_threshold - 1e-5);
    EXPECT_LE(f.ctx.sensing_objective(sol.x), f.ctx.sensing_objective(f.start) * (1 + 1e-6));
    for (double c : sol.common) EXPECT_GE(c, 0.0);
  }
}

TEST(InnerProblem, ElasticRaisesWorstRate) {
  Fixture f = desk(4);
  const CMat eye = CMat::Identity(f.ctx.n_tx, f.ctx.n_tx);
  const CMat weak = f.start * 0.05;
  const double before = min_rate(f.ctx, weak);
  const MmResult r = restore_rates(f.ctx, eye, InnerVariant::FullyDigital, weak, before + 1.0, OptimizeOptions{});
  EXPECT_GT(r.min_rate, before);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LT(r.trace[i], r.trace[i - 1]);
}

TEST(PrecoderMm, TraceIsMonotone) {
  const Fixture f = desk(5);
  const CMat eye = CMat::Identity(f.ctx.n_tx, f.ctx.n_tx);
  OptimizeOptions opt;
  opt.max_inner = 15;
  const MmResult r = precoder_mm(f.ctx, eye, InnerVariant::FullyDigital, f.start, opt);
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_TRUE(r.reached);
}

TEST(Design, MatchedFilterStartIsUnitNorm) {
  const Fixture f = desk(6);
  EXPECT_NEAR(f.start.norm(), 1.0, 1e-12);
  const Fixture s = desk(6, AccessScheme::Sdma);
  EXPECT_EQ(s.start.col(0).norm(), 0.0);
}

TEST(Design, ProjectPowerOnlyShrinks) {
  CMat x = CMat::Ones(3, 2);
  EXPECT_NEAR(project_power(x).norm(), 1.0, 1e-12);
  x *= 0.1;
  EXPECT_EQ(project_power(x), x);
}

TEST(Design, IsotropicReferenceNormalizesObjective) {
  const Fixture f = desk(7);
  const CMat iso = CMat::Identity(f.ctx.n_tx, f.ctx.n_tx) / std::sqrt(static_cast<double>(f.ctx.n_tx));
  // A covariance of I/N_t at full power scores exactly one.
  const CrbResult c = f.ctx.sensing->crb(iso * iso.adjoint() * f.ctx.power_budget);
  EXPECT_NEAR(c.trace / f.ctx.crb_reference, 1.0, 1e-12);
}
