#include "jdpo/cache_knapsack.hpp"

#include <algorithm>
#include <numeric>

namespace jdpo {
namespace {

struct Search {
  const PlacementProblem& p;
  std::vector<int> order;
  // Suffix sums over `order` of positive values and of relief.
  std::vector<double> relief_suffix;
  std::vector<int> current;
  PlacementResult best;

  double FractionalBound(int pos, double room) const {
    double bound = 0;
    for (int q = pos; q < static_cast<int>(order.size()); ++q) {
      const int k = order[q];
      if (p.value[k] <= 0) continue;
      if (p.size_bits[k] <= room) {
        bound += p.value[k];
        room -= p.size_bits[k];
      } else {
        bound += p.value[k] * room / p.size_bits[k];
        break;
      }
    }
    return bound;
  }

  void Visit(int pos, double room, double value, double relief) {
    if (relief + relief_suffix[pos] < p.relief_required_bps) return;
    if (best.feasible && value + FractionalBound(pos, room) <= best.value) return;
    if (pos == static_cast<int>(order.size())) {
      if (relief >= p.relief_required_bps && (!best.feasible || value > best.value)) {
        best.feasible = true;
        best.value = value;
        best.cached = current;
      }
      return;
    }
    const int k = order[pos];
    if (p.size_bits[k] <= room) {
      current[k] = 1;
      Visit(pos + 1, room - p.size_bits[k], value + p.value[k], relief + p.relief_bps[k]);
      current[k] = 0;
    }
    Visit(pos + 1, room, value, relief);
  }
};

BinaryMatrix GreedyFill(const Scenario& s, bool per_bit) {
  const int F = s.num_files();
  std::vector<double> score(F, 0.0);
  for (int k = 0; k < F; ++k) {
    for (int i = 0; i < s.num_users(); ++i) score[k] += s.preference(i, k);
    if (per_bit) score[k] /= s.file(k).size_bits;
  }
  std::vector<int> order(F);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] > score[b]; });
  BinaryMatrix y = BinaryMatrix::Zero(s.num_sbs(), F);
  for (int j = 0; j < s.num_sbs(); ++j) {
    double room = s.sbs(j).cache_capacity_bits;
    for (int k : order) {
      if (s.file(k).size_bits <= room) {
        y(j, k) = 1;
        room -= s.file(k).size_bits;
      }
    }
  }
  return y;
}

}  // namespace

PlacementProblem MakePlacementProblem(const Scenario& s, const ObjectiveWeights& w, int j,
                                      const std::vector<int>& users) {
  const int F = s.num_files();
  const SbsSpec& sbs = s.sbs(j);
  PlacementProblem p;
  p.size_bits.resize(F);
  p.value.assign(F, 0.0);
  p.relief_bps.assign(F, 0.0);
  p.capacity_bits = sbs.cache_capacity_bits;
  double load = 0;
  for (int k = 0; k < F; ++k) {
    const FileSpec& f = s.file(k);
    p.size_bits[k] = f.size_bits;
    double q = 0;
    for (int i : users) q += s.preference(i, k);
    p.relief_bps[k] = q * f.rate_requirement_bps;
    load += p.relief_bps[k];
    p.value[k] = w.power_weight() * (sbs.backhaul_coeff_w_per_bps * p.relief_bps[k] -
                                     sbs.cache_coeff_w_per_bit * f.size_bits) +
                 w.delay_weight() * q * sbs.backhaul_delay_s;
  }
  p.relief_required_bps = load - sbs.backhaul_capacity_bps;
  return p;
}

PlacementResult SolvePlacement(const PlacementProblem& p) {
  const int F = static_cast<int>(p.size_bits.size());
  Search search{p, {}, {}, std::vector<int>(F, 0), {}};
  search.order.resize(F);
  std::iota(search.order.begin(), search.order.end(), 0);
  std::stable_sort(search.order.begin(), search.order.end(), [&](int a, int b) {
    return p.value[a] * p.size_bits[b] > p.value[b] * p.size_bits[a];
  });
  search.relief_suffix.assign(F + 1, 0.0);
  for (int q = F - 1; q >= 0; --q) {
    search.relief_suffix[q] = search.relief_suffix[q + 1] + p.relief_bps[search.order[q]];
  }
  search.Visit(0, p.capacity_bits, 0.0, 0.0);
  return search.best;
}

std::optional<BinaryMatrix> OptimalPlacement(const Scenario& s, const BinaryMatrix& x,
                                             const ObjectiveWeights& w) {
  BinaryMatrix y = BinaryMatrix::Zero(s.num_sbs(), s.num_files());
  for (int j = 0; j < s.num_sbs(); ++j) {
    std::vector<int> users;
    for (int i = 0; i < s.num_users(); ++i) {
      if (x(i, j)) users.push_back(i);
    }
    const PlacementResult r = SolvePlacement(MakePlacementProblem(s, w, j, users));
    if (!r.feasible) return std::nullopt;
    for (int k = 0; k < s.num_files(); ++k) y(j, k) = r.cached[k];
  }
  return y;
}

BinaryMatrix PopularityPlacement(const Scenario& s) { return GreedyFill(s, false); }

BinaryMatrix PopularityDensityPlacement(const Scenario& s) { return GreedyFill(s, true); }

}  // namespace jdpo
