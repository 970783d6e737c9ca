#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "nfisac/pdd_optimizer.hpp"
#include "oracles.hpp"

using namespace nfisac;

namespace {

std::mt19937_64 rng(17);

CMat random_cmat(int rows, int cols) {
  std::normal_distribution<double> n;
  CMat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

CMat random_phases(int rows, int cols) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  CMat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = std::polar(1.0, u(rng));
  return m;
}

}  // namespace

TEST(DigitalUpdate, ResidualOrthogonalToAnalogColumns) {
  for (int t = 0; t < 20; ++t) {
    const CMat f = random_phases(12, 4), target = random_cmat(12, 3);
    for (bool min_norm : {false, true}) {
      const CMat w = update_digital(f, target, min_norm);
      EXPECT_LT((f.adjoint() * (target - f * w)).norm() / (f.norm() * target.norm()), 1e-10);
    }
  }
}

TEST(DigitalUpdate, RepeatedColumnsNeedMinimumNorm) {
  CMat f = random_phases(8, 3);
  f.col(2) = f.col(0);
  const CMat target = random_cmat(8, 2);
  EXPECT_THROW(update_digital(f, target), RankError);
  const CMat w = update_digital(f, target, true);
  EXPECT_LT((f.adjoint() * (target - f * w)).norm(), 1e-10 * target.norm());
  EXPECT_NEAR(std::abs(w(0, 0) - w(2, 0)), 0.0, 1e-10);  // split evenly
  const CMat q = column_basis(f);
  EXPECT_EQ(q.cols(), 2);
  EXPECT_LT((q.adjoint() * q - CMat::Identity(2, 2)).norm(), 1e-12);
}

TEST(AnalogUpdate, ObjectiveIsShiftedDistance) {
  const CMat f = random_phases(6, 2), w = random_cmat(2, 3), target = random_cmat(6, 3);
  EXPECT_NEAR(analog_objective(f, w, target), (target - f * w).squaredNorm() - target.squaredNorm(), 1e-9);
}

TEST(AnalogUpdate, EntryPhaseMatchesGridSearch) {
  for (int t = 0; t < 20; ++t) {
    CMat f = random_phases(6, 3);
    const CMat w = random_cmat(3, 2), target = random_cmat(6, 2);
    const int n = t % 6, i = t % 3;
    const cplx chi = analog_coefficient(f, w, target, n, i);
    const double best = oracle::grid_best_phase(
        [&](double ph) {
          CMat g = f;
          g(n, i) = std::polar(1.0, ph);
          return analog_objective(g, w, target);
        },
        20000);
    const double diff = std::remainder(std::arg(chi) - best, 2 * kPi);
    EXPECT_LT(std::abs(diff), 2 * kPi / 20000 + 1e-9);
  }
}

TEST(AnalogUpdate, SweepNeverIncreases) {
  for (int t = 0; t < 50; ++t) {
    const CMat f = random_phases(16, 4), w = random_cmat(4, 3), target = random_cmat(16, 3);
    const CMat g = update_analog(Architecture::FullyConnected, f, w, target);
    EXPECT_LE(analog_objective(g, w, target), analog_objective(f, w, target) + 1e-10);
    EXPECT_TRUE(analog_matches(Architecture::FullyConnected, g, 16, 4));
  }
}

TEST(AnalogUpdate, PartialSweepTouchesOnlyItsBlocks) {
  const RMat support = partial_support(16, 4);
  const CMat f = random_phases(16, 4).cwiseProduct(support.cast<cplx>());
  const CMat w = random_cmat(4, 3), target = random_cmat(16, 3);
  const CMat g = update_analog(Architecture::PartiallyConnected, f, w, target);
  int changed = 0;
  for (int n = 0; n < 16; ++n) {
    for (int i = 0; i < 4; ++i) {
      if (support(n, i) == 0.0) EXPECT_EQ(g(n, i), cplx(0, 0));
      if (g(n, i) != f(n, i)) ++changed;
    }
  }
  EXPECT_LE(changed, 16);
  EXPECT_TRUE(analog_matches(Architecture::PartiallyConnected, g, 16, 4));
  EXPECT_LE(analog_objective(g, w, target), analog_objective(f, w, target) + 1e-10);
}

TEST(AnalogUpdate, ZeroCoefficientHoldsEntry) {
  const CMat f = random_phases(4, 2);
  const CMat w = CMat::Zero(2, 2), target = CMat::Zero(4, 2);
  EXPECT_EQ(update_analog(Architecture::FullyConnected, f, w, target), f);
}

TEST(Heuristic, UserOrderFollowsModuloRule) {
  // K = 3, N_f = 8: chains 1..6 take users 2,3,1,2,3,1; 7 and 8 the phase of the sum.
  const CMat a = random_phases(10, 3);
  const CMat f = heuristic_analog(a, 8, Architecture::FullyConnected);
  const int users[] = {1, 2, 0, 1, 2, 0};
  for (int j = 0; j < 6; ++j) EXPECT_EQ(f.col(j), a.col(users[j]));
  const CVec s = a.rowwise().sum();
  for (int n = 0; n < 10; ++n) {
    EXPECT_NEAR(std::abs(f(n, 6) - s(n) / std::abs(s(n))), 0.0, 1e-14);
    EXPECT_EQ(f(n, 7), f(n, 6));
  }
  EXPECT_TRUE(analog_matches(Architecture::FullyConnected, f, 10, 8));
}

TEST(Heuristic, SingleUserRepeatsSteering) {
  const CMat a = random_phases(6, 1);
  const CMat f = heuristic_analog(a, 3, Architecture::FullyConnected);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(f.col(j), a.col(0));
}

TEST(Heuristic, ZeroSumEntryFallsBackToPhaseZero) {
  CMat a(2, 2);
  a << cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, 1);
  const CMat f = heuristic_analog(a, 3, Architecture::FullyConnected);
  EXPECT_EQ(f(0, 2), cplx(1, 0));
}

class PddDesk : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scenario_ = new Scenario(generate_scenario(ScenarioConfig::desk(), 2));
    ctx_ = new DesignContext(DesignContext::from_scenario(*scenario_, AccessScheme::Rsma));
    analog_ = new CMat(heuristic_analog(scenario_->user_steering(), scenario_->n_rf, Architecture::FullyConnected));
    result_ = new OptimizeResult(pdd_optimize(*ctx_, Architecture::FullyConnected, *analog_, OptimizeOptions{}));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete analog_;
    delete ctx_;
    delete scenario_;
  }
  static Scenario* scenario_;
  static DesignContext* ctx_;
  static CMat* analog_;
  static OptimizeResult* result_;
};

Scenario* PddDesk::scenario_ = nullptr;
DesignContext* PddDesk::ctx_ = nullptr;
CMat* PddDesk::analog_ = nullptr;
OptimizeResult* PddDesk::result_ = nullptr;

TEST_F(PddDesk, ConvergesFeasibly) {
  const OptimizeResult& r = *result_;
  EXPECT_EQ(r.status, OptimizeStatus::Converged);
  EXPECT_LE(r.violation, 1e-5);
  EXPECT_LE(r.outer_iterations, 30);
  EXPECT_GE(r.min_rate, scenario_->rate_threshold - 1e-3);
  EXPECT_LE(r.beamformer.product().squaredNorm(), scenario_->power_budget * (1 + 1e-6));
  EXPECT_TRUE(analog_matches(Architecture::FullyConnected, r.beamformer.analog, 16, 4));
}

TEST_F(PddDesk, InnerLoopsMonotone) {
  for (const auto& trace : result_->inner_traces) {
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-8 * std::abs(trace[i - 1]));
  }
}

TEST_F(PddDesk, ReportsCrbOfReturnedProduct) {
  const CMat x = result_->beamformer.product() / ctx_->amplitude();
  EXPECT_NEAR(ctx_->crb(x).trace, result_->crb.trace, 1e-9 * result_->crb.trace);
  // P and FW agree at convergence, so their CRBs do too.
  EXPECT_NEAR(result_->crb_aux_trace / result_->crb.trace, 1.0, 1e-3);
}

TEST_F(PddDesk, WarmStartNeverWorse) {
  const OptimizeResult again =
      pdd_optimize(*ctx_, Architecture::FullyConnected, *analog_, OptimizeOptions{}, &result_->beamformer);
  EXPECT_LE(again.crb.trace, result_->crb.trace);
  const OptimizeResult fd = optimize_fully_digital(*ctx_, OptimizeOptions{}, &result_->beamformer);
  EXPECT_LE(fd.crb.trace, result_->crb.trace);
}

TEST_F(PddDesk, IterationLogRecordsSteps) {
  std::ostringstream os;
  IterationLog log(os);
  OptimizeOptions opt;
  opt.log = &log;
  opt.tag = "t";
  opt.max_outer = 2;
  pdd_optimize(*ctx_, Architecture::FullyConnected, *analog_, opt);
  std::istringstream in(os.str());
  std::string line;
  int outer = 0, inner = 0;
  while (std::getline(in, line)) {
    ASSERT_EQ(line.front(), '{');
    outer += line.find("\"level\":\"outer\"") != std::string::npos;
    inner += line.find("\"level\":\"inner\"") != std::string::npos;
  }
  EXPECT_EQ(outer, 2);
  EXPECT_GT(inner, 0);
}

TEST(Pdd, RejectsWrongArchitecture) {
  const Scenario s = generate_scenario(ScenarioConfig::desk(), 1);
  const DesignContext ctx = DesignContext::from_scenario(s, AccessScheme::Rsma);
  const CMat f = heuristic_analog(s.user_steering(), s.n_rf, Architecture::FullyConnected);
  EXPECT_THROW(pdd_optimize(ctx, Architecture::TwoStage, f, OptimizeOptions{}), DomainError);
  CMat bad = f;
  bad(0, 0) *= 2.0;
  EXPECT_THROW(pdd_optimize(ctx, Architecture::FullyConnected, bad, OptimizeOptions{}), DomainError);
}

TEST(Pdd, UnreachableRateIsInfeasible) {
  ScenarioConfig cfg = ScenarioConfig::desk();
  cfg.rate_threshold = 40.0;
  const Scenario s = generate_scenario(cfg, 1);
  const DesignContext ctx = DesignContext::from_scenario(s, AccessScheme::Rsma);
  const OptimizeResult r = optimize_fully_digital(ctx, OptimizeOptions{});
  EXPECT_EQ(r.status, OptimizeStatus::Infeasible);
}

TEST(MaxMin, SingleUserMeetsCapacityFromAnyStart) {
  ScenarioConfig cfg = ScenarioConfig::desk();
  cfg.users = 1;
  const Scenario s = generate_scenario(cfg, 4);
  const DesignContext ctx = DesignContext::from_scenario(s, AccessScheme::Rsma);
  const CMat eye = CMat::Identity(ctx.n_tx, ctx.n_tx);
  const CMat start = random_cmat(ctx.n_tx, 2) * 1e-3;
  const MaxMinResult r = max_min_rate(ctx, eye, OptimizeOptions{}, &start);
  const double capacity = std::log2(1.0 + ctx.channels.col(0).squaredNorm());
  EXPECT_NEAR(r.rate, capacity, 1e-2);
  EXPECT_GT(r.oracle_calls, 0);
  EXPECT_NEAR(min_rate(ctx, r.precoder / ctx.amplitude()), r.rate, 1e-9);
}
