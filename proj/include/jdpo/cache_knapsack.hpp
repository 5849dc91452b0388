#pragma once

#include <optional>
#include <vector>

#include "jdpo/common.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

// Placement of one SBS's cache for a fixed set of associated users. Caching
// file k lowers the objective by value[k] and the backhaul load by
// relief_bps[k].
struct PlacementProblem {
  std::vector<double> size_bits;
  std::vector<double> value;
  std::vector<double> relief_bps;
  double capacity_bits = 0;
  // Backhaul load that caching has to remove to meet the link capacity.
  double relief_required_bps = 0;
};

struct PlacementResult {
  bool feasible = false;
  // 0/1 per file.
  std::vector<int> cached;
  double value = 0;
};

PlacementProblem MakePlacementProblem(const Scenario& scenario, const ObjectiveWeights& weights,
                                      int sbs, const std::vector<int>& users);

// Exact branch and bound. Among optimal sets the one found first in
// value-density order wins, so the result is deterministic.
PlacementResult SolvePlacement(const PlacementProblem& problem);

// F2-optimal placement for association x, empty when some SBS cannot meet
// its backhaul capacity with any placement.
std::optional<BinaryMatrix> OptimalPlacement(const Scenario& scenario, const BinaryMatrix& x,
                                             const ObjectiveWeights& weights);

// Every cache filled by descending aggregate request probability sum_i q_ik,
// skipping files that no longer fit. Ties go to the lower file index.
BinaryMatrix PopularityPlacement(const Scenario& scenario);

// Same fill ordered by aggregate request probability per bit.
BinaryMatrix PopularityDensityPlacement(const Scenario& scenario);

}  // namespace jdpo
