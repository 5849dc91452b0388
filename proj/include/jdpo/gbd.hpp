#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "jdpo/common.hpp"
#include "jdpo/convex_approx.hpp"
#include "jdpo/cuts.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/interior_point.hpp"
#include "jdpo/master_solver.hpp"
#include "jdpo/scenario.hpp"
#include "jdpo/sdr_master.hpp"

namespace jdpo {

enum class InitialStrategy { kStrongestGain, kRandom };

struct GbdConfig {
  double epsilon = 1e-3;
  int max_iterations = 200;
  // kSdr tries the relaxation with rounding first and falls back to the
  // exact master when rounding fails or proposes an association that was
  // already evaluated.
  MasterMode master_mode = MasterMode::kExact;
  InitialStrategy initial_strategy = InitialStrategy::kStrongestGain;
  std::uint64_t initial_seed = 1;
  // Number of times the rate bound is refitted at the incumbent's powers
  // and the decomposition rerun.
  int refit_approx = 0;
  // Identical master solutions in a row, without bound progress, before the
  // run is stopped.
  int stall_limit = 3;
  SdrOptions sdr;
  IpmOptions ipm;
  MasterOptions master;
  // wall_ms stays 0 unless set, which keeps traces reproducible.
  bool record_timing = false;
};

struct TraceRow {
  int t = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  // "feasible" or "infeasible".
  std::string primal_status;
  CutKind cut_kind = CutKind::kOptimality;
  double master_objective = 0;
  MasterMode master_mode = MasterMode::kExact;
  double wall_ms = 0;
};

enum class GbdStatus { kEpsilonOptimal, kIterationLimit, kMasterInfeasible, kNoSolution };

const char* GbdStatusName(GbdStatus status);

struct GbdResult {
  GbdStatus status = GbdStatus::kNoSolution;
  bool has_solution = false;
  // Powers in watts, zero on pairs that are not associated.
  Assignment best_assignment;
  LogPower best_log_powers;
  double objective_surrogate = std::numeric_limits<double>::infinity();
  double objective_exact = std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<TraceRow> trace;
  std::vector<Cut> cuts;
  ApproxParams params;
  // Master iterations that fell back from the relaxation to the exact
  // master.
  int sdr_fallbacks = 0;
};

// Strongest gain picks argmax_j g_ij with ties to the lowest index. Random
// picks uniformly per user.
BinaryMatrix InitialAssociation(const Scenario& scenario, InitialStrategy strategy,
                                std::uint64_t seed = 1);

// Decomposition with the rate bound fitted at the default anchor.
GbdResult RunGbd(const Scenario& scenario, const ObjectiveWeights& weights,
                 const GbdConfig& config);

// Same with caller-supplied rate bound constants.
GbdResult RunGbd(const Scenario& scenario, const ObjectiveWeights& weights,
                 const GbdConfig& config, const ApproxParams& params);

// RunGbd with the relaxation-based master.
GbdResult RunApuf(const Scenario& scenario, const ObjectiveWeights& weights, GbdConfig config);

// Header t,ub,lb,primal_status,cut_kind,master_obj,wall_ms.
void WriteTraceCsv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace jdpo
