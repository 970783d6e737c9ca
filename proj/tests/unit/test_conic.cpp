#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "nfisac/conic_program.hpp"

using namespace nfisac;

TEST(Conic, LinearProgram) {
  // min a + b, a >= 1, b >= 2
  ConicProgram p;
  const int a = p.add_variable("a", 1), b = p.add_variable("b", 1);
  const int k = p.add_block(ConeKind::NonNegative, 2, "lp");
  p.add_constant(k, 0, 0, -1);
  p.add_coefficient(k, a, 0, 0, 1);
  p.add_constant(k, 1, 0, -2);
  p.add_coefficient(k, b, 1, 0, 1);
  const ConicSolution s = solve_conic(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.objective, 3.0, 1e-6);
  EXPECT_NEAR(s.y(0), 1.0, 1e-6);
}

TEST(Conic, SecondOrderProjection) {
  // min t, ||(x - 3, y + 4)|| <= t, x >= 5: t = 2 at (5, -4)
  ConicProgram p;
  const int t = p.add_variable("t", 1), x = p.add_variable("x"), y = p.add_variable("y");
  const int k = p.add_block(ConeKind::SecondOrder, 3, "soc");
  p.add_coefficient(k, t, 0, 0, 1);
  p.add_coefficient(k, x, 1, 0, 1);
  p.add_constant(k, 1, 0, -3);
  p.add_coefficient(k, y, 2, 0, 1);
  p.add_constant(k, 2, 0, 4);
  const int l = p.add_block(ConeKind::NonNegative, 1, "x>=5");
  p.add_coefficient(l, x, 0, 0, 1);
  p.add_constant(l, 0, 0, -5);
  const ConicSolution s = solve_conic(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.objective, 2.0, 1e-6);
  EXPECT_NEAR(s.y(1), 5.0, 1e-5);
  EXPECT_NEAR(s.y(2), -4.0, 1e-5);
}

TEST(Conic, LargestEigenvalue) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  RMat a(6, 6);
  for (int i = 0; i < 36; ++i) a.data()[i] = n(rng);
  a = (a + a.transpose()).eval();
  ConicProgram p;
  const int l = p.add_variable("l", 1);
  const int k = p.add_block(ConeKind::Semidefinite, 6, "psd");
  for (int i = 0; i < 6; ++i) {
    p.add_coefficient(k, l, i, i, 1);
    for (int j = i; j < 6; ++j) p.add_constant(k, i, j, -a(i, j));
  }
  const ConicSolution s = solve_conic(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.objective, Eigen::SelfAdjointEigenSolver<RMat>(a).eigenvalues().maxCoeff(), 1e-6);
}

// Trace of an inverse through the Schur lift [V I; I U] >= 0, U <= J.
TEST(Conic, TraceOfInverseLift) {
  RMat j(2, 2);
  j << 2.0, 0.5, 0.5, 1.0;
  ConicProgram p;
  const int u00 = p.add_variable("u00"), u01 = p.add_variable("u01"), u11 = p.add_variable("u11");
  const int v00 = p.add_variable("v00", 1), v01 = p.add_variable("v01"), v11 = p.add_variable("v11", 1);
  const int k = p.add_block(ConeKind::Semidefinite, 4, "lift");
  p.add_coefficient(k, v00, 0, 0, 1);
  p.add_coefficient(k, v01, 0, 1, 1);
  p.add_coefficient(k, v11, 1, 1, 1);
  p.add_constant(k, 0, 2, 1);
  p.add_constant(k, 1, 3, 1);
  p.add_coefficient(k, u00, 2, 2, 1);
  p.add_coefficient(k, u01, 2, 3, 1);
  p.add_coefficient(k, u11, 3, 3, 1);
  const int q = p.add_block(ConeKind::Semidefinite, 2, "j-u");
  for (int r = 0; r < 2; ++r)
    for (int c = r; c < 2; ++c) p.add_constant(q, r, c, j(r, c));
  p.add_coefficient(q, u00, 0, 0, -1);
  p.add_coefficient(q, u01, 0, 1, -1);
  p.add_coefficient(q, u11, 1, 1, -1);
  const ConicSolution s = solve_conic(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.objective, j.inverse().trace(), 1e-6);
  EXPECT_GE(p.cone_margin(k, s.y), -ConicSolverOptions{}.tol);
}

TEST(Conic, DetectsPrimalInfeasibility) {
  ConicProgram p;
  const int x = p.add_variable("x", 1);
  const int k = p.add_block(ConeKind::NonNegative, 2, "lp");
  p.add_coefficient(k, x, 0, 0, 1);
  p.add_constant(k, 0, 0, -1);
  p.add_coefficient(k, x, 1, 0, -1);
  EXPECT_EQ(solve_conic(p).status, ConicStatus::PrimalInfeasible);
}

TEST(Conic, DetectsInfeasibleSecondOrder) {
  // ||(a, b)|| <= 1 with a >= 2
  ConicProgram p;
  const int a = p.add_variable("a", 0), b = p.add_variable("b", 1);
  const int k = p.add_block(ConeKind::SecondOrder, 3, "soc");
  p.add_constant(k, 0, 0, 1);
  p.add_coefficient(k, a, 1, 0, 1);
  p.add_coefficient(k, b, 2, 0, 1);
  const int l = p.add_block(ConeKind::NonNegative, 1, "a>=2");
  p.add_coefficient(l, a, 0, 0, 1);
  p.add_constant(l, 0, 0, -2);
  EXPECT_EQ(solve_conic(p).status, ConicStatus::PrimalInfeasible);
}

TEST(Conic, BlockScalingKeepsSolution) {
  ConicProgram p;
  const int a = p.add_variable("a", 1);
  const int k = p.add_block(ConeKind::NonNegative, 1, "a>=3");
  p.add_coefficient(k, a, 0, 0, 1);
  p.add_constant(k, 0, 0, -3);
  p.scale_block(k, 1e3);
  const ConicSolution s = solve_conic(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.y(0), 3.0, 1e-6);
}

TEST(Conic, EntryValidation) {
  ConicProgram p;
  const int a = p.add_variable("a");
  const int k = p.add_block(ConeKind::Semidefinite, 2, "psd");
  EXPECT_ANY_THROW(p.add_coefficient(k, a, 1, 0, 1.0));  // lower triangle
  EXPECT_ANY_THROW(p.add_coefficient(k, a, 0, 2, 1.0));
  EXPECT_ANY_THROW(p.add_coefficient(k, 7, 0, 0, 1.0));
}

TEST(Conic, DumpFormat) {
  ConicProgram p;
  const int a = p.add_variable("a", 2.5);
  const int k = p.add_block(ConeKind::SecondOrder, 2, "cone");
  p.add_coefficient(k, a, 1, 0, 1.0);
  p.add_constant(k, 0, 0, 1.0);
  std::ostringstream ss;
  p.dump(ss);
  const std::string out = ss.str();
  EXPECT_EQ(out.rfind("nfisac-conic 1", 0), 0u);
  EXPECT_NE(out.find("block 0 soc 2 cone"), std::string::npos);
}
