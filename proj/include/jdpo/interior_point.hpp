#pragma once

#include <vector>

#include "jdpo/common.hpp"

namespace jdpo {

struct ProgramEval {
  double f = 0;
  Vector grad;
  Matrix hess;
  // Constraint values g(x) <= 0 and their Jacobian (m x n).
  Vector g;
  Matrix jac;
  // Per-constraint Hessians. Filled only for second-order evaluations.
  std::vector<Matrix> g_hess;
};

// Smooth convex program min f(x) s.t. g(x) <= 0.
class ConvexProgram {
 public:
  virtual ~ConvexProgram() = default;
  virtual int num_variables() const = 0;
  virtual int num_constraints() const = 0;
  // Returns false when x lies outside the domain of f or g.
  virtual bool Evaluate(const Vector& x, bool second_order, ProgramEval* out) const = 0;
};

struct IpmTraceRow {
  int iteration = 0;
  double barrier_t = 0;
  double stationarity = 0;
  // m / t, the duality gap of the current central point.
  double surrogate_gap = 0;
  double step = 0;
};

struct IpmOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;
  // Barrier parameter growth per centering round.
  double mu_factor = 20.0;
  double armijo = 0.01;
  double backtrack = 0.5;
  // Per-iteration rows are appended here when set.
  std::vector<IpmTraceRow>* trace = nullptr;
};

struct IpmResult {
  bool converged = false;
  int iterations = 0;
  Vector x;
  Vector lambda;
  double objective = 0;
  double stationarity = 0;
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  double complementarity = 0;

  double kkt_residual() const;
};

// Log-barrier interior-point method with Newton centering. Multipliers are
// read off the central path. `x0` must be strictly feasible.
IpmResult SolveConvexProgram(const ConvexProgram& program, const Vector& x0,
                             const IpmOptions& options = {});

}  // namespace jdpo
