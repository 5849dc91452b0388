#pragma once

#include <iosfwd>
#include <vector>

#include "jdpo/common.hpp"

namespace jdpo {

// One element of a symmetric matrix. Off-diagonal elements are stored once
// and mirrored.
struct SymEntry {
  int row = 0;
  int col = 0;
  double value = 0;
};

struct LpEntry {
  int index = 0;
  double value = 0;
};

// <A, X> + a^T x = rhs.
struct SdpConstraint {
  std::vector<SymEntry> psd;
  std::vector<LpEntry> lp;
  double rhs = 0;
};

// min <C, X> + c^T x  s.t. the constraints, X PSD of order psd_dim, x >= 0
// of length lp_dim.
struct SdpProblem {
  int psd_dim = 0;
  int lp_dim = 0;
  std::vector<SymEntry> c_psd;
  Vector c_lp;
  std::vector<SdpConstraint> constraints;
};

struct SdpOptions {
  int max_iterations = 100;
  double tolerance = 1e-7;
};

struct SdpResult {
  bool converged = false;
  int iterations = 0;
  Matrix X;
  Vector x_lp;
  Vector y;
  Matrix S;
  Vector s_lp;
  double primal_objective = 0;
  double dual_objective = 0;
  double relative_gap = 0;
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
};

Matrix DenseSymmetric(const std::vector<SymEntry>& entries, int dim);

// Infeasible-start primal-dual path following with the HKM direction and
// Mehrotra's predictor-corrector. Dense, meant for orders up to about 100.
SdpResult SolveSdp(const SdpProblem& problem, const SdpOptions& options = {});

// Plain-text dump: dimensions, objective, then one block per constraint
// with its PSD and LP entries.
void WriteSdp(std::ostream& out, const SdpProblem& problem);

}  // namespace jdpo
