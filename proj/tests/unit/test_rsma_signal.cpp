#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "nfisac/rsma_signal.hpp"
#include "oracles.hpp"

using namespace nfisac;

namespace {

CMat random_cmat(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

}  // namespace

TEST(Rates, MatchDirectSinr) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 4, nt = 3 + trial % 5;
    const CMat h = random_cmat(rng, nt, k), p = random_cmat(rng, nt, k + 1);
    const double noise = 0.3;
    const oracle::Sinr s = oracle::sinr(h, p, noise);
    const RateReport r = achievable_rates(received_powers(h, p, noise), std::vector<double>(k, 0.0));
    double common = HUGE_VAL;
    for (int u = 0; u < k; ++u) {
      EXPECT_NEAR(r.common_rates[u], std::log2(1 + s.common[u]), 1e-12);
      EXPECT_NEAR(r.private_rates[u], std::log2(1 + s.priv[u]), 1e-12);
      common = std::min(common, std::log2(1 + s.common[u]));
    }
    EXPECT_NEAR(r.common_rate, common, 1e-12);
  }
}

TEST(Rates, MaxMinAllocationMatchesBisection) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 5;
    const CMat h = random_cmat(rng, 6, k), p = random_cmat(rng, 6, k + 1);
    const PowerDecomposition pw = received_powers(h, p, 1.0);
    const std::vector<double> alloc = max_min_allocation(pw);
    const RateReport r = achievable_rates(pw, alloc);
    EXPECT_TRUE(r.allocation_feasible);
    const double level = oracle::max_min_level(r.private_rates, r.common_rate);
    EXPECT_NEAR(r.min_rate(), level, 1e-9);
    EXPECT_LE(std::accumulate(alloc.begin(), alloc.end(), 0.0), r.common_rate + 1e-12);
  }
}

TEST(Rates, NegativeAllocationRejected) {
  const CMat h = CMat::Ones(2, 1), p = CMat::Ones(2, 2);
  EXPECT_THROW(achievable_rates(received_powers(h, p, 1.0), {-0.1}), DomainError);
  EXPECT_THROW(achievable_rates(received_powers(h, p, 1.0), {0.0, 0.0}), DimensionError);
}

TEST(Rates, ShapeChecks) {
  EXPECT_THROW(received_powers(CMat::Ones(3, 2), CMat::Ones(3, 2), 1.0), DimensionError);
  EXPECT_THROW(received_powers(CMat::Ones(3, 1), CMat::Ones(4, 2), 1.0), DimensionError);
  EXPECT_THROW(received_powers(CMat::Ones(3, 1), CMat::Ones(3, 2), -1.0), DomainError);
}

// Weighted MSE at the optimal equalizer and weight equals tau - R.
TEST(Wmmse, RateIdentityProperty) {
  std::mt19937_64 rng(11);
  const double tau = wmmse_tau();
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 3;
    const CMat h = random_cmat(rng, 4, k), p = random_cmat(rng, 4, k + 1);
    const WmmseAuxiliaries a = wmmse_auxiliaries(h, p, 0.5);
    const RateReport r = achievable_rates(received_powers(h, p, 0.5), std::vector<double>(k, 0.0));
    for (int u = 0; u < k; ++u) {
      EXPECT_NEAR(weighted_mse(a.wt_common[u], a.mmse_common[u]), tau - r.common_rates[u], 1e-10);
      EXPECT_NEAR(weighted_mse(a.wt_private[u], a.mmse_private[u]), tau - r.private_rates[u], 1e-10);
    }
  }
}

// The MMSE equalizer beats any perturbation of itself.
TEST(Wmmse, EqualizerIsMseMinimizer) {
  std::mt19937_64 rng(13);
  const CMat h = random_cmat(rng, 5, 2), p = random_cmat(rng, 5, 3);
  const PowerDecomposition pw = received_powers(h, p, 0.2);
  const WmmseAuxiliaries a = wmmse_auxiliaries(h, p, 0.2);
  for (int u = 0; u < 2; ++u) {
    const cplx g = h.col(u).adjoint() * p.col(u + 1);
    const double best = equalizer_mse(a.eq_private[u], pw.users[u].t_private, g);
    for (cplx d : {cplx(1e-3, 0), cplx(0, 1e-3), cplx(-1e-3, 1e-3)}) {
      EXPECT_GT(equalizer_mse(a.eq_private[u] + d, pw.users[u].t_private, g), best);
    }
  }
}

TEST(Wmmse, ZeroPowerIsDegenerate) {
  EXPECT_THROW(wmmse_auxiliaries(CMat::Ones(2, 1), CMat::Zero(2, 2), 0.0), DegenerateEqualizerError);
  EXPECT_THROW(weighted_mse(0.0, 1.0), DomainError);
}

TEST(Wmmse, TauConstant) { EXPECT_NEAR(wmmse_tau(), 1.0 / std::log(2.0) + std::log2(std::log(2.0)), 1e-15); }
