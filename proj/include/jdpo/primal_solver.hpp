#pragma once

#include <optional>
#include <string>

#include "jdpo/common.hpp"
#include "jdpo/convex_approx.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/interior_point.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

enum class PrimalStatus { kOptimal, kInfeasible, kNumericalFailure };

// Optimum of the power allocation problem for a fixed association. Only the
// associated pairs are variables; every other pair stays at the floor.
struct PrimalSolution {
  BinaryMatrix x;
  LogPower log_powers;
  // Surrogate F1 at the optimum.
  double objective = 0;
  // Multipliers of exp(logp_ij) <= x_ij P_j, U x B, in objective units per
  // watt.
  Matrix duals_mu;
  // Multipliers of the per-SBS budget sum_i exp(logp_ij) <= P_j.
  Vector duals_budget;
  // Multipliers of the per-user rate requirement, per bps.
  Vector duals_rate;
  // KKT residual of the scaled problem.
  double kkt_residual = 0;
  // Relative gap between the dual value and the primal objective, including
  // the barrier gap.
  double duality_gap = 0;
  int iterations = 0;
};

struct PrimalOutcome {
  PrimalStatus status = PrimalStatus::kNumericalFailure;
  std::optional<PrimalSolution> solution;
  std::string message;

  bool optimal() const { return status == PrimalStatus::kOptimal; }
};

// Smallest per-user powers meeting every surrogate rate requirement under
// association x, ignoring power budgets. Empty when the requirements cannot
// be met at any power.
std::optional<Vector> MinimumPowers(const Scenario& scenario, const ApproxParams& params,
                                    const BinaryMatrix& x);

// x must have exactly one 1 per row.
PrimalOutcome SolvePrimal(const Scenario& scenario, const ApproxParams& params,
                          const BinaryMatrix& x, const ObjectiveWeights& weights,
                          const IpmOptions& options = {});

// Lagrangian with the power-cap multipliers: F1(p*) + sum mu (exp(logp) - x P).
double DualValue(const Scenario& scenario, const ApproxParams& params, const BinaryMatrix& x,
                 const PrimalSolution& solution, const ObjectiveWeights& weights);

enum class FeasibilityStatus {
  // The power caps can be met: eta = 0.
  kFeasible,
  // eta > 0 with certified multipliers.
  kViolated,
  // The rate requirements cannot be met at any power.
  kHardInfeasible,
  kNumericalFailure,
};

// Solution of min eta s.t. exp(logp_ij) - P_j <= eta on associated pairs,
// per-SBS budgets relaxed by eta, rate requirements kept hard.
struct FeasibilityCertificate {
  FeasibilityStatus status = FeasibilityStatus::kNumericalFailure;
  BinaryMatrix x;
  double eta = 0;  // watts
  LogPower log_powers;
  // Multipliers of the relaxed per-pair caps, U x B.
  Matrix duals_nu;
  // Multipliers of the relaxed per-SBS budgets.
  Vector duals_nu_budget;
  // Multipliers of the rate requirements, watts per bps.
  Vector duals_rate;
  double nu_sum = 0;
  double kkt_residual = 0;
};

FeasibilityCertificate SolveFeasibility(const Scenario& scenario, const ApproxParams& params,
                                        const BinaryMatrix& x, const IpmOptions& options = {});

}  // namespace jdpo
