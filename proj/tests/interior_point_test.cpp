#include "jdpo/interior_point.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace jdpo {
namespace {

// min (x - 2)^2  s.t.  x - 1 <= 0.
class ClippedQuadratic : public ConvexProgram {
 public:
  int num_variables() const override { return 1; }
  int num_constraints() const override { return 1; }
  bool Evaluate(const Vector& x, bool second_order, ProgramEval* out) const override {
    out->f = (x(0) - 2) * (x(0) - 2);
    out->grad = Vector::Constant(1, 2 * (x(0) - 2));
    out->g = Vector::Constant(1, x(0) - 1);
    out->jac = Matrix::Ones(1, 1);
    if (second_order) {
      out->hess = Matrix::Constant(1, 1, 2.0);
      out->g_hess = {Matrix::Zero(1, 1)};
    }
    return true;
  }
};

// min x + y  s.t.  x^2 + y^2 - 1 <= 0.
class LinearOverDisk : public ConvexProgram {
 public:
  int num_variables() const override { return 2; }
  int num_constraints() const override { return 1; }
  bool Evaluate(const Vector& x, bool second_order, ProgramEval* out) const override {
    out->f = x.sum();
    out->grad = Vector::Ones(2);
    out->g = Vector::Constant(1, x.squaredNorm() - 1);
    out->jac = 2 * x.transpose();
    if (second_order) {
      out->hess = Matrix::Zero(2, 2);
      out->g_hess = {2 * Matrix::Identity(2, 2)};
    }
    return true;
  }
};

// min exp(x) + exp(-y)  s.t.  x >= 0.5, y <= 3, x + y <= 4. Solution
// x = 0.5, y = 3 with multipliers exp(0.5), exp(-3) - 0, and 0 on the sum.
class ExpBox : public ConvexProgram {
 public:
  int num_variables() const override { return 2; }
  int num_constraints() const override { return 3; }
  bool Evaluate(const Vector& v, bool second_order, ProgramEval* out) const override {
    out->f = std::exp(v(0)) + std::exp(-v(1));
    out->grad = Vector(2);
    out->grad << std::exp(v(0)), -std::exp(-v(1));
    out->g = Vector(3);
    out->g << 0.5 - v(0), v(1) - 3, v(0) + v(1) - 4;
    out->jac = Matrix(3, 2);
    out->jac << -1, 0, 0, 1, 1, 1;
    if (second_order) {
      out->hess = Matrix::Zero(2, 2);
      out->hess(0, 0) = std::exp(v(0));
      out->hess(1, 1) = std::exp(-v(1));
      out->g_hess.assign(3, Matrix::Zero(2, 2));
    }
    return true;
  }
};

TEST(SolveConvexProgramTest, ActiveBound) {
  const IpmResult r = SolveConvexProgram(ClippedQuadratic{}, Vector::Constant(1, 0.0));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
  EXPECT_NEAR(r.lambda(0), 2.0, 1e-6);
  EXPECT_LE(r.kkt_residual(), 1e-7);
}

TEST(SolveConvexProgramTest, CurvedConstraint) {
  const IpmResult r = SolveConvexProgram(LinearOverDisk{}, Vector::Zero(2));
  ASSERT_TRUE(r.converged);
  const double c = -1 / std::sqrt(2.0);
  EXPECT_NEAR(r.x(0), c, 1e-7);
  EXPECT_NEAR(r.x(1), c, 1e-7);
  EXPECT_NEAR(r.lambda(0), 1 / std::sqrt(2.0), 1e-6);
}

TEST(SolveConvexProgramTest, MixedActiveAndInactive) {
  Vector x0(2);
  x0 << 1.0, 1.0;
  std::vector<IpmTraceRow> trace;
  IpmOptions options;
  options.trace = &trace;
  const IpmResult r = SolveConvexProgram(ExpBox{}, x0, options);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 0.5, 1e-7);
  EXPECT_NEAR(r.x(1), 3.0, 1e-7);
  EXPECT_NEAR(r.lambda(0), std::exp(0.5), 1e-6);
  EXPECT_NEAR(r.lambda(1), std::exp(-3.0), 1e-6);
  EXPECT_NEAR(r.lambda(2), 0.0, 1e-7);
  EXPECT_LE(r.complementarity, 1e-7);
  ASSERT_FALSE(trace.empty());
  for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_GE(trace[k].barrier_t, trace[k - 1].barrier_t);
}

TEST(SolveConvexProgramTest, MultipliersStayNonnegative) {
  const IpmResult r = SolveConvexProgram(ExpBox{}, Vector::Ones(2));
  EXPECT_TRUE((r.lambda.array() >= 0).all());
}

}  // namespace
}  // namespace jdpo
