#include "jdpo/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "jdpo/cache_knapsack.hpp"
#include "jdpo/gbd.hpp"
#include "jdpo/primal_solver.hpp"

namespace jdpo {
namespace {

// Calls f(x) for every one-hot association, last user fastest.
template <typename Visit>
void ForEachAssociation(int U, int B, Visit&& f) {
  std::vector<int> code(U, 0);
  BinaryMatrix x = BinaryMatrix::Zero(U, B);
  while (true) {
    x.setZero();
    for (int i = 0; i < U; ++i) x(i, code[i]) = 1;
    f(x);
    int i = U - 1;
    while (i >= 0 && ++code[i] == B) code[i--] = 0;
    if (i < 0) return;
  }
}

LogPower LogPowersOf(const Matrix& watts) {
  return LogPower::FromWatts(watts.cwiseMax(kPowerFloorW));
}

void Finish(const Scenario& s, const ObjectiveWeights& w, const ApproxParams& params,
            PolicyResult* r) {
  r->report = Evaluate(s, r->assignment, w);
  r->objective = r->report.objective_value;
  r->objective_surrogate = SurrogateObjective(s, params, r->assignment.association,
                                              r->assignment.placement,
                                              LogPowersOf(r->assignment.tx_power_w), w)
                               .total;
  const std::vector<ConstraintMargin> violated = CheckFeasibility(s, r->assignment);
  r->feasible = violated.empty();
  if (!r->feasible) r->message = "violates constraint " + violated.front().id;
}

// Per-SBS brute force over placements. F2 is a sum of per-SBS terms, so the
// other rows can stay fixed while one row is searched.
std::optional<BinaryMatrix> BrutePlacement(const Scenario& s, const BinaryMatrix& x,
                                           const ObjectiveWeights& w) {
  const int B = s.num_sbs(), F = s.num_files();
  BinaryMatrix y = BinaryMatrix::Zero(B, F);
  Assignment a = Assignment::Empty(s);
  a.association = x;
  for (int j = 0; j < B; ++j) {
    double best = std::numeric_limits<double>::infinity();
    int best_mask = -1;
    for (int mask = 0; mask < (1 << F); ++mask) {
      for (int k = 0; k < F; ++k) y(j, k) = mask >> k & 1;
      a.placement = y;
      bool ok = true;
      for (const ConstraintMargin& m : ConstraintMargins(s, a)) {
        if ((m.id == "cache" || m.id == "backhaul") && m.index == j && m.margin < -kFeasibilityTol) ok = false;
      }
      if (!ok) continue;
      const double value = F2(s, x, y, w);
      if (value < best) {
        best = value;
        best_mask = mask;
      }
    }
    if (best_mask < 0) return std::nullopt;
    for (int k = 0; k < F; ++k) y(j, k) = best_mask >> k & 1;
  }
  return y;
}

}  // namespace

PolicyResult CcpPolicy(const Scenario& s, const ObjectiveWeights& w) {
  return CcpPolicy(s, w, FitParams(s, DefaultAnchorPowers(s)));
}

PolicyResult CcpPolicy(const Scenario& s, const ObjectiveWeights& w, const ApproxParams& params) {
  PolicyResult r;
  r.policy_name = "ccp";
  r.assignment = Assignment::Empty(s);
  r.assignment.association = InitialAssociation(s, InitialStrategy::kStrongestGain);
  r.assignment.placement = PopularityPlacement(s);
  // The fixed point is the smallest power vector meeting every rate, so if
  // it breaks a budget no other vector fits.
  const std::optional<Vector> p = MinimumPowers(s, params, r.assignment.association);
  if (!p) {
    r.message = "rates unreachable at the strongest-gain association";
    return r;
  }
  for (int i = 0; i < s.num_users(); ++i) {
    r.assignment.tx_power_w(i, r.assignment.ServingSbs(i)) = (*p)(i);
  }
  for (int j = 0; j < s.num_sbs(); ++j) {
    if (r.assignment.tx_power_w.col(j).sum() > s.sbs(j).max_tx_power_w) {
      r.message = "power allocation infeasible at the strongest-gain association";
      return r;
    }
  }
  Finish(s, w, params, &r);
  return r;
}

PolicyResult DfPolicy(const Scenario& s, const ObjectiveWeights& w) {
  return DfPolicy(s, w, FitParams(s, DefaultAnchorPowers(s)));
}

PolicyResult DfPolicy(const Scenario& s, const ObjectiveWeights& w, const ApproxParams& params) {
  const int U = s.num_users(), B = s.num_sbs();
  ObjectiveWeights delay_only;
  delay_only.theta = 0.0;
  delay_only.delta_d = 1.0;
  PolicyResult r;
  r.policy_name = "df";
  double best_delay = std::numeric_limits<double>::infinity();
  ForEachAssociation(U, B, [&](const BinaryMatrix& x) {
    Assignment a = Assignment::Empty(s);
    a.association = x;
    for (int j = 0; j < B; ++j) {
      const int users = x.col(j).sum();
      for (int i = 0; i < U; ++i) {
        if (x(i, j)) a.tx_power_w(i, j) = s.sbs(j).max_tx_power_w / users;
      }
    }
    const std::optional<BinaryMatrix> y = OptimalPlacement(s, x, delay_only);
    if (!y) return;
    a.placement = *y;
    if (!CheckFeasibility(s, a).empty()) return;
    double delay = 0;
    for (int i = 0; i < U; ++i) delay += UserDelay(s, a, i);
    if (delay < best_delay) {
      best_delay = delay;
      r.assignment = a;
    }
  });
  if (!std::isfinite(best_delay)) {
    r.assignment = Assignment::Empty(s);
    r.message = "no association meets the rate requirements at an even power split";
    return r;
  }
  Finish(s, w, params, &r);
  return r;
}

OracleResult ExhaustiveOracle(const Scenario& s, const ObjectiveWeights& w,
                              const ApproxParams& params, const OracleLimits& limits) {
  const int U = s.num_users(), B = s.num_sbs(), F = s.num_files();
  if (U * B > limits.max_pairs || B * F > limits.max_placement_bits) {
    throw std::invalid_argument("instance exceeds the exhaustive oracle limits");
  }
  OracleResult out;
  out.surrogate.policy_name = "oracle";
  out.surrogate.assignment = Assignment::Empty(s);
  double best = std::numeric_limits<double>::infinity();
  double best_grid = std::numeric_limits<double>::infinity();
  ForEachAssociation(U, B, [&](const BinaryMatrix& x) {
    ++out.associations_enumerated;
    const std::optional<BinaryMatrix> y = BrutePlacement(s, x, w);
    if (!y) return;
    if (limits.exact_grid) {
      // Log-spaced powers per user, checked with the exact model.
      Assignment a = Assignment::Empty(s);
      a.association = x;
      a.placement = *y;
      std::vector<int> level(U, 0);
      const int G = limits.grid_points;
      while (true) {
        for (int i = 0; i < U; ++i) {
          int j = 0;
          for (; j < B && !x(i, j); ++j) {
          }
          const double frac = G == 1 ? 1.0
                                     : std::pow(limits.grid_min_fraction,
                                                1.0 - static_cast<double>(level[i]) / (G - 1));
          a.tx_power_w(i, j) = frac * s.sbs(j).max_tx_power_w;
        }
        if (CheckFeasibility(s, a).empty()) {
          const double value = Objective(s, a, w);
          if (value < best_grid) {
            best_grid = value;
            PolicyResult g;
            g.policy_name = "oracle_grid";
            g.assignment = a;
            Finish(s, w, params, &g);
            out.exact_grid = g;
          }
        }
        int i = U - 1;
        while (i >= 0 && ++level[i] == G) level[i--] = 0;
        if (i < 0) break;
      }
    }
    const PrimalOutcome primal = SolvePrimal(s, params, x, w);
    if (!primal.optimal()) return;
    ++out.associations_feasible;
    const double value = primal.solution->objective + F2(s, x, *y, w);
    if (value < best) {
      best = value;
      Assignment a = Assignment::Empty(s);
      a.association = x;
      a.placement = *y;
      const Matrix watts = primal.solution->log_powers.ToWatts();
      for (int i = 0; i < U; ++i) {
        for (int j = 0; j < B; ++j) a.tx_power_w(i, j) = x(i, j) ? watts(i, j) : 0.0;
      }
      out.surrogate.assignment = a;
    }
  });
  if (std::isfinite(best)) {
    Finish(s, w, params, &out.surrogate);
    out.surrogate.objective_surrogate = best;
  } else {
    out.surrogate.message = "no association admits a feasible power allocation";
  }
  return out;
}

}  // namespace jdpo
