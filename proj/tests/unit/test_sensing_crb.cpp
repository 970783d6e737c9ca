#include <gtest/gtest.h>

#include <random>

#include "nfisac/sensing_crb.hpp"
#include "oracles.hpp"

using namespace nfisac;

namespace {

struct Instance {
  ArrayGeometry g;
  TargetSet t;
  SensingConfig cfg;
  CMat p;
};

Instance make(std::uint64_t seed, int nt, int nr, int m, int streams) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1), range(20, 30), angle(-1.0, 1.0), phase(-kPi, kPi);
  Instance in;
  in.g = ArrayGeometry::from_apertures(nt, nr, 0.5, 0.5, 30e9);
  for (int i = 0; i < m; ++i) {
    in.t.positions.push_back({range(rng), angle(rng)});
    in.t.gains.push_back(std::polar(1.0, phase(rng)));
  }
  in.cfg.cpi_length = 32;
  in.cfg.noise = 0.5;
  in.p.resize(nt, streams);
  for (int j = 0; j < streams; ++j)
    for (int i = 0; i < nt; ++i) in.p(i, j) = cplx(u(rng), u(rng));
  return in;
}

}  // namespace

TEST(Fim, MatchesMeanDerivativeOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Instance in = make(seed, 4 + seed % 5, 3 + seed % 6, 1 + seed % 2, 1 + seed % 3);
    const RMat f = assemble_fim(in.g, in.t, in.p * in.p.adjoint(), in.cfg).full();
    const RMat o = oracle::fim_from_mean(in.g, in.t, in.p, in.cfg);
    EXPECT_LT((f - o).norm() / o.norm(), 1e-10) << "seed " << seed;
  }
}

TEST(Fim, MatchesFiniteDifferenceOracle) {
  const Instance in = make(21, 6, 5, 2, 3);
  const RMat f = assemble_fim(in.g, in.t, in.p * in.p.adjoint(), in.cfg).full();
  const RMat fd = fim_fd_oracle(in.g, in.t, in.p, in.cfg);
  EXPECT_LT((f - fd).norm() / fd.norm(), 1e-4);
}

TEST(Fim, SymmetricPositiveSemidefinite) {
  const Instance in = make(4, 8, 8, 2, 3);
  const RMat f = assemble_fim(in.g, in.t, in.p * in.p.adjoint(), in.cfg).full();
  EXPECT_LT((f - f.transpose()).norm(), 1e-12 * f.norm());
  Eigen::SelfAdjointEigenSolver<RMat> es(f);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().maxCoeff());
}

TEST(Fim, ModelAgreesWithBundleAndRankTwoForm) {
  const Instance in = make(8, 16, 8, 2, 3);
  const CMat cov = in.p * in.p.adjoint();
  const FimBundle b = assemble_fim(in.g, in.t, cov, in.cfg);
  const SensingModel model(in.g, in.t, in.cfg);
  const RMat ref = b.full() / b.scale;
  EXPECT_LT((model.fim(cov) - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
  EXPECT_LT((0.5 * model.fim_rank2(in.p, in.p) - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
  // Linear in the covariance.
  const CMat q = CMat::Identity(16, 16);
  const RMat lin = model.fim(cov + 2.0 * q) - model.fim(cov) - 2.0 * model.fim(q);
  EXPECT_LT(lin.cwiseAbs().maxCoeff(), 1e-11 * ref.cwiseAbs().maxCoeff());
}

TEST(Crb, SchurEqualsLeadingBlockOfInverse) {
  const Instance in = make(9, 16, 8, 2, 4);
  const FimBundle b = assemble_fim(in.g, in.t, in.p * in.p.adjoint(), in.cfg);
  const CrbResult c = crb_trace(b, in.cfg);
  const RMat lead = b.full().inverse().topLeftCorner(4, 4);
  EXPECT_LT((c.crb - lead).norm() / lead.norm(), 1e-8);
  EXPECT_NEAR(c.trace, c.angle_trace + c.range_trace, 1e-12 * c.trace);
  EXPECT_NEAR(c.angle_trace, c.crb(0, 0) + c.crb(1, 1), 1e-12 * c.trace);
}

TEST(Crb, DoublingCpiHalvesTrace) {
  const Instance in = make(10, 12, 8, 2, 3);
  SensingConfig twice = in.cfg;
  twice.cpi_length *= 2;
  const CMat cov = in.p * in.p.adjoint();
  const double a = crb_trace(assemble_fim(in.g, in.t, cov, in.cfg), in.cfg).trace;
  const double b = crb_trace(assemble_fim(in.g, in.t, cov, twice), twice).trace;
  EXPECT_NEAR(b / a, 0.5, 1e-10);
}

TEST(Crb, ScalesInverselyWithPower) {
  const Instance in = make(12, 12, 8, 1, 2);
  const SensingModel model(in.g, in.t, in.cfg);
  const CMat cov = in.p * in.p.adjoint();
  EXPECT_NEAR(model.crb(4.0 * cov).trace / model.crb(cov).trace, 0.25, 1e-10);
}

TEST(Crb, ZeroCovarianceIsRankDeficient) {
  const Instance in = make(2, 8, 8, 2, 1);
  const SensingModel model(in.g, in.t, in.cfg);
  EXPECT_THROW(model.crb(CMat::Zero(8, 8)), RankDeficiencyError);
  try {
    model.crb(CMat::Zero(8, 8));
  } catch (const RankDeficiencyError& e) {
    EXPECT_FALSE(e.parameters.empty());
  }
}

TEST(Crb, NonHermitianCovarianceRejected) {
  const Instance in = make(2, 4, 4, 1, 1);
  CMat c = CMat::Identity(4, 4);
  c(0, 1) = cplx(1, 0);
  EXPECT_ANY_THROW(assemble_fim(in.g, in.t, c, in.cfg));
}

TEST(Fim, ParameterNames) {
  EXPECT_NE(fim_parameter_name(0, 2), fim_parameter_name(2, 2));
  EXPECT_NE(fim_parameter_name(4, 2), fim_parameter_name(6, 2));
}
