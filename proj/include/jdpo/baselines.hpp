#pragma once

#include <limits>
#include <optional>
#include <string>

#include "jdpo/common.hpp"
#include "jdpo/convex_approx.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

struct PolicyResult {
  std::string policy_name;
  bool feasible = false;
  std::string message;
  Assignment assignment;
  ModelReport report;
  // Exact objective F.
  double objective = std::numeric_limits<double>::infinity();
  // Surrogate objective with the rate bound in place of the exact rate.
  double objective_surrogate = std::numeric_limits<double>::infinity();
};

// Popularity caching, identical at every SBS, strongest-gain association and
// minimum transmit power for that association.
PolicyResult CcpPolicy(const Scenario& scenario, const ObjectiveWeights& weights,
                       const ApproxParams& params);
PolicyResult CcpPolicy(const Scenario& scenario, const ObjectiveWeights& weights);

// Association and placement that minimize total delay, with each SBS's power
// budget split evenly among its users.
PolicyResult DfPolicy(const Scenario& scenario, const ObjectiveWeights& weights,
                      const ApproxParams& params);
PolicyResult DfPolicy(const Scenario& scenario, const ObjectiveWeights& weights);

struct OracleLimits {
  int max_pairs = 12;            // U * B
  int max_placement_bits = 16;   // B * F
  // Also search transmit powers on a grid with the exact model.
  bool exact_grid = false;
  int grid_points = 12;
  // Lowest grid power as a fraction of P_j.
  double grid_min_fraction = 1e-6;
};

struct OracleResult {
  // Global optimum of the surrogate problem.
  PolicyResult surrogate;
  int associations_enumerated = 0;
  int associations_feasible = 0;
  // Best point of the exact-model grid search, when requested.
  std::optional<PolicyResult> exact_grid;
};

// Enumerates every association and, per SBS, every placement meeting cache
// and backhaul capacity; solves the power allocation problem for each
// association. Throws std::invalid_argument beyond the limits.
OracleResult ExhaustiveOracle(const Scenario& scenario, const ObjectiveWeights& weights,
                              const ApproxParams& params, const OracleLimits& limits = {});

}  // namespace jdpo
