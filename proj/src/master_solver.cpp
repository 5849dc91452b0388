#include "jdpo/master_solver.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>

#include "jdpo/cache_knapsack.hpp"

namespace jdpo {

const char* MasterModeName(MasterMode mode) {
  return mode == MasterMode::kExact ? "exact" : "sdr";
}

bool ExcludedByCuts(const std::vector<Cut>& cuts, const BinaryMatrix& x) {
  for (const Cut& c : cuts) {
    if (c.kind != CutKind::kOptimality && c.Evaluate(x) > kCutExclusionTol) return true;
  }
  return false;
}

double PhiAt(const std::vector<Cut>& cuts, const BinaryMatrix& x) {
  double phi = 0.0;
  for (const Cut& c : cuts) {
    if (c.kind == CutKind::kOptimality) phi = std::max(phi, c.Evaluate(x));
  }
  return phi;
}

long long CountAssociations(const BinaryMatrix& admissible) {
  long long count = 1;
  for (int i = 0; i < admissible.rows(); ++i) {
    count *= admissible.row(i).sum();
    if (count == 0) return 0;
    if (count > (1LL << 50)) return count;
  }
  return count;
}

std::optional<MasterSolution> SolveMasterExact(const Scenario& s, const BinaryMatrix& admissible,
                                               const std::vector<Cut>& cuts,
                                               const ObjectiveWeights& w,
                                               const MasterOptions& options) {
  const int U = s.num_users(), B = s.num_sbs(), F = s.num_files();
  if (U > 63) throw std::invalid_argument("exact master supports at most 63 users");
  if (CountAssociations(admissible) > options.max_associations) {
    throw std::invalid_argument("too many associations for the exact master");
  }
  std::vector<std::vector<int>> choices(U);
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      if (admissible(i, j)) choices[i].push_back(j);
    }
    if (choices[i].empty()) return std::nullopt;
  }

  // Placement of SBS j depends only on its set of users.
  std::map<std::pair<int, std::uint64_t>, PlacementResult> memo;
  auto placement = [&](int j, std::uint64_t mask) -> const PlacementResult& {
    auto it = memo.find({j, mask});
    if (it != memo.end()) return it->second;
    std::vector<int> users;
    for (int i = 0; i < U; ++i) {
      if (mask >> i & 1) users.push_back(i);
    }
    return memo.emplace(std::make_pair(j, mask),
                        SolvePlacement(MakePlacementProblem(s, w, j, users)))
        .first->second;
  };

  std::optional<MasterSolution> best;
  std::vector<int> pick(U, 0);
  BinaryMatrix x = BinaryMatrix::Zero(U, B);
  for (int i = 0; i < U; ++i) x(i, choices[i][0]) = 1;
  while (true) {
    if (!ExcludedByCuts(cuts, x)) {
      std::vector<std::uint64_t> masks(B, 0);
      for (int i = 0; i < U; ++i) masks[choices[i][pick[i]]] |= std::uint64_t{1} << i;
      bool feasible = true;
      for (int j = 0; j < B && feasible; ++j) feasible = placement(j, masks[j]).feasible;
      if (feasible) {
        BinaryMatrix y(B, F);
        for (int j = 0; j < B; ++j) {
          const PlacementResult& r = placement(j, masks[j]);
          for (int k = 0; k < F; ++k) y(j, k) = r.cached[k];
        }
        const double phi = PhiAt(cuts, x);
        const double f2 = F2(s, x, y, w);
        if (!best || phi + f2 < best->objective) {
          best = MasterSolution{x, y, phi, f2, phi + f2, MasterMode::kExact};
        }
      }
    }
    // Odometer step, last user fastest.
    int i = U - 1;
    for (; i >= 0; --i) {
      x(i, choices[i][pick[i]]) = 0;
      if (++pick[i] < static_cast<int>(choices[i].size())) {
        x(i, choices[i][pick[i]]) = 1;
        break;
      }
      pick[i] = 0;
      x(i, choices[i][0]) = 1;
    }
    if (i < 0) break;
  }
  return best;
}

}  // namespace jdpo
