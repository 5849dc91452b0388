#include "jdpo/sdp.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>
#include <sstream>

namespace jdpo {
namespace {

Matrix RandomSymmetric(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = g(rng);
  }
  return 0.5 * (a + a.transpose());
}

std::vector<SymEntry> Upper(const Matrix& m) {
  std::vector<SymEntry> out;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = r; c < m.cols(); ++c) out.push_back({r, c, m(r, c)});
  }
  return out;
}

double MinEigen(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues()(0); }

TEST(DenseSymmetricTest, MirrorsOffDiagonalEntries) {
  const Matrix m = DenseSymmetric({{0, 1, 2.0}, {1, 1, 3.0}, {1, 0, 0.5}}, 2);
  EXPECT_EQ(m(0, 1), 2.5);
  EXPECT_EQ(m(1, 0), 2.5);
  EXPECT_EQ(m(1, 1), 3.0);
  EXPECT_EQ(m(0, 0), 0.0);
}

TEST(SolveSdpTest, UnitTraceGivesTheSmallestEigenvalue) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix c = RandomSymmetric(6, seed);
    SdpProblem p;
    p.psd_dim = 6;
    p.c_psd = Upper(c);
    SdpConstraint trace;
    for (int d = 0; d < 6; ++d) trace.psd.push_back({d, d, 1.0});
    trace.rhs = 1.0;
    p.constraints.push_back(trace);
    const SdpResult r = SolveSdp(p);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.primal_objective, MinEigen(c), 1e-6);
    EXPECT_NEAR(r.dual_objective, MinEigen(c), 1e-6);
    EXPECT_GE(MinEigen(r.X), -1e-7);
    EXPECT_GE(MinEigen(r.S), -1e-7);
  }
}

TEST(SolveSdpTest, LinearProgramWithAnIdleBlock) {
  // min x0 + 2 x1 + 3 x2 + 10 X  s.t.  x0 + x1 + x2 + X = 1, x0 - x1 = 0.
  SdpProblem p;
  p.psd_dim = 1;
  p.lp_dim = 3;
  p.c_psd = {{0, 0, 10.0}};
  p.c_lp = Vector(3);
  p.c_lp << 1, 2, 3;
  p.constraints.push_back({{{0, 0, 1.0}}, {{0, 1}, {1, 1}, {2, 1}}, 1.0});
  p.constraints.push_back({{}, {{0, 1}, {1, -1}}, 0.0});
  const SdpResult r = SolveSdp(p);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.primal_objective, 1.5, 1e-6);
  EXPECT_NEAR(r.x_lp(0), 0.5, 1e-6);
  EXPECT_NEAR(r.x_lp(1), 0.5, 1e-6);
  EXPECT_NEAR(r.x_lp(2), 0.0, 1e-6);
  EXPECT_NEAR(r.X(0, 0), 0.0, 1e-6);
}

TEST(SolveSdpTest, MixedBlocksPickTheCheaperSide) {
  // min <diag(1, 2), X> + c x  s.t.  tr X + x = 1.
  for (double c : {0.5, 3.0}) {
    SdpProblem p;
    p.psd_dim = 2;
    p.lp_dim = 1;
    p.c_psd = {{0, 0, 1.0}, {1, 1, 2.0}};
    p.c_lp = Vector::Constant(1, c);
    p.constraints.push_back({{{0, 0, 1.0}, {1, 1, 1.0}}, {{0, 1.0}}, 1.0});
    const SdpResult r = SolveSdp(p);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.primal_objective, std::min(c, 1.0), 1e-6);
    EXPECT_NEAR(r.x_lp(0), c < 1 ? 1.0 : 0.0, 1e-6);
  }
}

TEST(SolveSdpTest, UnitDiagonalRelaxation) {
  for (std::uint64_t seed = 10; seed <= 14; ++seed) {
    const int n = 8;
    const Matrix c = RandomSymmetric(n, seed);
    SdpProblem p;
    p.psd_dim = n;
    p.c_psd = Upper(c);
    for (int d = 0; d < n; ++d) p.constraints.push_back({{{d, d, 1.0}}, {}, 1.0});
    const SdpResult r = SolveSdp(p);
    ASSERT_TRUE(r.converged);
    EXPECT_GE(MinEigen(r.X), -1e-7);
    EXPECT_GE(MinEigen(r.S), -1e-7);
    for (int d = 0; d < n; ++d) EXPECT_NEAR(r.X(d, d), 1.0, 1e-6);
    EXPECT_LE(r.relative_gap, 1e-6);
    // Weak duality against any feasible point, here the identity.
    EXPECT_LE(r.dual_objective, c.trace() + 1e-9);
    // Dual residual C - sum y_k A_k - S.
    Matrix residual = c - r.S;
    for (int d = 0; d < n; ++d) residual(d, d) -= r.y(d);
    EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(WriteSdpTest, ListsEveryConstraint) {
  SdpProblem p;
  p.psd_dim = 2;
  p.lp_dim = 1;
  p.c_psd = {{0, 1, 1.0}};
  p.c_lp = Vector::Zero(1);
  p.constraints.push_back({{{0, 0, 1.0}}, {{0, 1.0}}, 1.0});
  p.constraints.push_back({{{1, 1, 1.0}}, {}, 2.0});
  std::ostringstream out;
  WriteSdp(out, p);
  EXPECT_FALSE(out.str().empty());
  EXPECT_NE(out.str().find('2'), std::string::npos);
}

}  // namespace
}  // namespace jdpo
