#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jdpo/common.hpp"
#include "jdpo/cuts.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/master_solver.hpp"
#include "jdpo/scenario.hpp"
#include "jdpo/sdp.hpp"

namespace jdpo {

// Semidefinite relaxation of the master problem. The lifted vector is
// z = (x over admissible pairs, y, phi) and the PSD variable is the bordered
// matrix Y = [1 z^T; z Z] with Z standing in for z z^T. Inequalities carry
// a nonnegative slack in the LP block.
struct SdrProblem {
  SdpProblem sdp;
  // Added to <C, Y> to obtain phi + F2.
  double objective_constant = 0;
  // Position in Y of x_ij (row-major U x B) and y_jk (row-major B x F);
  // -1 for pairs that were not lifted.
  std::vector<int> x_index;
  std::vector<int> y_index;
  int phi_index = 0;
  // Upper bound on phi enforced through Y_phi,phi.
  double phi_bound = 0;
  // One label per constraint: "unit", "assign", "binary", "cache",
  // "backhaul", "optimality_cut", "feasibility_cut", "phi_nonneg",
  // "phi_bound" or "product".
  std::vector<std::string> labels;
  // Sign of the slack in each constraint, 0 for equalities.
  std::vector<int> slack_sign;
  int num_users = 0;
  int num_sbs = 0;
  int num_files = 0;
};

struct SdrOptions {
  // Largest admissible U*B + B*F + 1.
  int max_lifted_dim = 64;
  int rounding_trials = 200;
  std::uint64_t seed = 1;
  SdpOptions sdp;
};

struct SdrSolution {
  bool converged = false;
  // Bordered matrix Y.
  Matrix lifted_matrix;
  // Certified lower bound (dual objective) on the master optimum.
  double relaxed_objective = 0;
  double primal_relaxed_objective = 0;
  int sdp_iterations = 0;
  int rounding_trials = 0;
  int feasible_samples = 0;
  std::optional<MasterSolution> best_rounded;
};

// Throws std::invalid_argument when U*B + B*F + 1 exceeds the limit.
SdrProblem BuildSdr(const Scenario& scenario, const BinaryMatrix& admissible,
                    const std::vector<Cut>& cuts, const ObjectiveWeights& weights,
                    int max_lifted_dim = 64);

// Bordered matrix of a point z.
Matrix LiftPoint(const SdrProblem& problem, const BinaryMatrix& x, const BinaryMatrix& y,
                 double phi);

struct LiftedEvaluation {
  // <C, Y> + constant.
  double objective = 0;
  // Largest |residual| over equality constraints.
  double equality_residual = 0;
  // Smallest implied slack over inequality constraints.
  double min_slack = 0;
};

LiftedEvaluation EvaluateLifted(const SdrProblem& problem, const Matrix& Y);

SdrSolution SolveSdr(const SdrProblem& problem, const SdpOptions& options = {});

// Gaussian randomization around the relaxed solution. Fills
// best_rounded, rounding_trials and feasible_samples.
void RoundSdr(const Scenario& scenario, const SdrProblem& problem,
              const std::vector<Cut>& cuts, const ObjectiveWeights& weights, int trials,
              std::uint64_t seed, SdrSolution* solution);

}  // namespace jdpo
