#include "jdpo/gbd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <vector>

#include "jdpo/cache_knapsack.hpp"
#include "jdpo/primal_solver.hpp"

namespace jdpo {
namespace {

std::vector<int> Encode(const BinaryMatrix& x) {
  std::vector<int> code(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    Eigen::Index j;
    x.row(i).maxCoeff(&j);
    code[i] = static_cast<int>(j);
  }
  return code;
}

bool PlacementFits(const Scenario& s, const BinaryMatrix& x, const BinaryMatrix& y) {
  Assignment a = Assignment::Empty(s);
  a.association = x;
  a.placement = y;
  for (const ConstraintMargin& m : ConstraintMargins(s, a)) {
    if ((m.id == "cache" || m.id == "backhaul") && m.margin < -kFeasibilityTol) return false;
  }
  return true;
}

struct Incumbent {
  BinaryMatrix x;
  BinaryMatrix y;
  LogPower log_powers;
};

GbdResult RunOnce(const Scenario& s, const ObjectiveWeights& w, const GbdConfig& config,
                  const ApproxParams& params, const BinaryMatrix& x0) {
  using Clock = std::chrono::steady_clock;
  GbdResult result;
  result.params = params;
  const BinaryMatrix admissible = AdmissiblePairs(s, params);
  BinaryMatrix x = x0;
  BinaryMatrix y = PopularityDensityPlacement(s);
  std::map<std::vector<int>, PrimalOutcome> primal_cache;
  std::optional<Incumbent> incumbent;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  std::optional<std::pair<BinaryMatrix, BinaryMatrix>> last_master;
  int stalled = 0;
  result.status = GbdStatus::kIterationLimit;

  for (int t = 1; t <= config.max_iterations; ++t) {
    const auto start = Clock::now();
    TraceRow row;
    row.t = t;
    const std::vector<int> code = Encode(x);
    const bool seen = primal_cache.count(code) > 0;
    if (!seen) primal_cache.emplace(code, SolvePrimal(s, params, x, w, config.ipm));
    const PrimalOutcome& primal = primal_cache.at(code);
    if (primal.optimal()) {
      row.primal_status = "feasible";
      row.cut_kind = CutKind::kOptimality;
      if (!seen) result.cuts.push_back(MakeOptimalityCut(s, params, w, *primal.solution));
      if (PlacementFits(s, x, y)) {
        const double candidate = primal.solution->objective + F2(s, x, y, w);
        if (candidate < ub) {
          ub = candidate;
          incumbent = Incumbent{x, y, primal.solution->log_powers};
        }
      }
    } else {
      row.primal_status = "infeasible";
      if (!seen) {
        const FeasibilityCertificate cert = SolveFeasibility(s, params, x, config.ipm);
        if (cert.status == FeasibilityStatus::kViolated) {
          result.cuts.push_back(MakeFeasibilityCut(s, params, cert));
        } else {
          // Rates unreachable, or a solver breakdown at a borderline
          // association: exclude this association alone.
          result.cuts.push_back(MakeNoGoodCut(x));
        }
      }
      row.cut_kind = result.cuts.back().kind;
      for (auto it = result.cuts.rbegin(); it != result.cuts.rend(); ++it) {
        if (it->kind != CutKind::kOptimality && it->Evaluate(x) > kCutExclusionTol) {
          row.cut_kind = it->kind;
          break;
        }
      }
    }
    if (!seen) result.cuts.back().iteration = t;

    std::optional<MasterSolution> master;
    double master_lb = -std::numeric_limits<double>::infinity();
    bool use_exact = config.master_mode == MasterMode::kExact;
    if (!use_exact) {
      try {
        const SdrProblem sdr = BuildSdr(s, admissible, result.cuts, w, config.sdr.max_lifted_dim);
        SdrSolution relaxed = SolveSdr(sdr, config.sdr.sdp);
        if (relaxed.converged) {
          RoundSdr(s, sdr, result.cuts, w, config.sdr.rounding_trials,
                   config.sdr.seed + static_cast<std::uint64_t>(t), &relaxed);
          if (relaxed.best_rounded && !primal_cache.count(Encode(relaxed.best_rounded->x))) {
            master = relaxed.best_rounded;
            master_lb = relaxed.relaxed_objective;
          }
        }
      } catch (const std::invalid_argument&) {
        // Lifted problem too large.
      }
      if (!master) {
        use_exact = true;
        ++result.sdr_fallbacks;
      }
    }
    if (use_exact) {
      master = SolveMasterExact(s, admissible, result.cuts, w, config.master);
      if (master) master_lb = master->objective;
    }
    if (!master) {
      result.status = incumbent ? GbdStatus::kMasterInfeasible : GbdStatus::kNoSolution;
      // Every association is excluded, so the incumbent is optimal.
      if (incumbent) lb = ub;
      row.ub = ub;
      row.lb = lb;
      row.master_objective = std::numeric_limits<double>::quiet_NaN();
      row.master_mode = config.master_mode;
      if (config.record_timing) {
        row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      }
      result.trace.push_back(row);
      result.iterations = t;
      break;
    }
    const double previous_ub = ub, previous_lb = lb;
    lb = std::max(lb, master_lb);
    row.ub = ub;
    row.lb = lb;
    row.master_objective = master->objective;
    row.master_mode = master->mode;
    if (config.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
    result.trace.push_back(row);
    result.iterations = t;
    if (ub - lb <= config.epsilon) {
      result.status = GbdStatus::kEpsilonOptimal;
      break;
    }
    const bool repeated = last_master && last_master->first == master->x &&
                          last_master->second == master->y;
    stalled = repeated && ub == previous_ub && lb == previous_lb ? stalled + 1 : 0;
    if (stalled >= config.stall_limit) {
      result.status = GbdStatus::kIterationLimit;
      break;
    }
    last_master = std::make_pair(master->x, master->y);
    x = master->x;
    y = master->y;
  }

  result.upper_bound = ub;
  result.lower_bound = lb;
  if (incumbent) {
    result.has_solution = true;
    result.best_log_powers = incumbent->log_powers;
    Assignment a = Assignment::Empty(s);
    a.association = incumbent->x;
    a.placement = incumbent->y;
    const Matrix watts = incumbent->log_powers.ToWatts();
    for (int i = 0; i < s.num_users(); ++i) {
      for (int j = 0; j < s.num_sbs(); ++j) a.tx_power_w(i, j) = a.association(i, j) ? watts(i, j) : 0.0;
    }
    result.best_assignment = a;
    result.objective_surrogate = ub;
    result.objective_exact = Objective(s, a, w);
  }
  return result;
}

}  // namespace

const char* GbdStatusName(GbdStatus status) {
  switch (status) {
    case GbdStatus::kEpsilonOptimal:
      return "epsilon_optimal";
    case GbdStatus::kIterationLimit:
      return "iteration_limit";
    case GbdStatus::kMasterInfeasible:
      return "master_infeasible";
    case GbdStatus::kNoSolution:
      return "no_solution";
  }
  return "unknown";
}

BinaryMatrix InitialAssociation(const Scenario& s, InitialStrategy strategy, std::uint64_t seed) {
  const int U = s.num_users(), B = s.num_sbs();
  BinaryMatrix x = BinaryMatrix::Zero(U, B);
  if (strategy == InitialStrategy::kStrongestGain) {
    for (int i = 0; i < U; ++i) {
      int best = 0;
      for (int j = 1; j < B; ++j) {
        if (s.gain(i, j) > s.gain(i, best)) best = j;
      }
      x(i, best) = 1;
    }
    return x;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, B - 1);
  for (int i = 0; i < U; ++i) x(i, pick(rng)) = 1;
  return x;
}

GbdResult RunGbd(const Scenario& s, const ObjectiveWeights& w, const GbdConfig& config) {
  return RunGbd(s, w, config, FitParams(s, DefaultAnchorPowers(s)));
}

GbdResult RunGbd(const Scenario& s, const ObjectiveWeights& w, const GbdConfig& config,
                 const ApproxParams& params) {
  w.Validate();
  if (!(config.epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  BinaryMatrix x0 = InitialAssociation(s, config.initial_strategy, config.initial_seed);
  GbdResult result = RunOnce(s, w, config, params, x0);
  for (int r = 0; r < config.refit_approx && result.has_solution; ++r) {
    const ApproxParams refit =
        RefitIteration(s, result.params, result.best_log_powers.ToWatts());
    GbdResult next = RunOnce(s, w, config, refit, result.best_assignment.association);
    if (!next.has_solution) break;
    result = std::move(next);
  }
  return result;
}

GbdResult RunApuf(const Scenario& s, const ObjectiveWeights& w, GbdConfig config) {
  config.master_mode = MasterMode::kSdr;
  return RunGbd(s, w, config);
}

void WriteTraceCsv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "t,ub,lb,primal_status,cut_kind,master_obj,wall_ms\n";
  const auto old_precision = out.precision(17);
  for (const TraceRow& r : trace) {
    out << r.t << ',' << r.ub << ',' << r.lb << ',' << r.primal_status << ','
        << CutKindName(r.cut_kind) << ',' << r.master_objective << ',' << r.wall_ms << '\n';
  }
  out.precision(old_precision);
}

}  // namespace jdpo
