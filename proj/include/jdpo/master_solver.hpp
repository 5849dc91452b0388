#pragma once

#include <optional>
#include <vector>

#include "jdpo/common.hpp"
#include "jdpo/cuts.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

enum class MasterMode { kExact, kSdr };

const char* MasterModeName(MasterMode mode);

struct MasterSolution {
  BinaryMatrix x;
  BinaryMatrix y;
  double phi = 0;
  double f2 = 0;
  // phi + F2(x, y).
  double objective = 0;
  MasterMode mode = MasterMode::kExact;
};

struct MasterOptions {
  // Refuse to enumerate more associations than this.
  long long max_associations = 20'000'000;
};

// Cut values above this exclude an association.
inline constexpr double kCutExclusionTol = 1e-10;

// True when a feasibility or no-good cut excludes x.
bool ExcludedByCuts(const std::vector<Cut>& cuts, const BinaryMatrix& x);

// Smallest phi allowed by the optimality cuts at x. The power allocation
// objective is nonnegative, so phi never drops below 0.
double PhiAt(const std::vector<Cut>& cuts, const BinaryMatrix& x);

// Number of associations that respect the admissibility mask.
long long CountAssociations(const BinaryMatrix& admissible);

// Minimizes phi + F2 over every admissible association and every placement
// meeting cache and backhaul capacities. Associations are enumerated in
// lexicographic order of serving SBS indices, so ties go to the first one.
// Empty when the cuts exclude every association.
std::optional<MasterSolution> SolveMasterExact(const Scenario& scenario,
                                               const BinaryMatrix& admissible,
                                               const std::vector<Cut>& cuts,
                                               const ObjectiveWeights& weights,
                                               const MasterOptions& options = {});

}  // namespace jdpo
