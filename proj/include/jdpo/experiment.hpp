#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jdpo/exact_model.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

// Malformed or out-of-range plan. The message starts with the key path.
class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SweepAxis { kNone, kTheta, kCache, kDensity, kPreferenceQ };
enum class Algorithm { kPuf, kApuf, kCcp, kDf, kOracle };

const char* SweepAxisName(SweepAxis axis);
const char* AlgorithmName(Algorithm algorithm);
SweepAxis ParseSweepAxis(const std::string& name);
Algorithm ParseAlgorithm(const std::string& name);

// Axis values:
//   theta         balancing factor, replaces the theta list
//   cache         cache capacity of every SBS, bits
//   density       SBS intensity per km^2; the SBS count is
//                 max(1, round(intensity * area)) so every point is usable
//   preference_q  weight of each user's private Zipf ranking, in [0, 1]
struct ExperimentPlan {
  // Exactly one of the two is set.
  std::optional<GenerationConfig> scenario_config;
  std::string scenario_file;

  std::vector<double> thetas{0.5};
  double delta_p = 0.002;
  double delta_d = 0.2;
  // Sets delta_p, delta_d so that total power and total delay of the CCP
  // solution both weigh 1.
  bool auto_normalize = false;

  SweepAxis axis = SweepAxis::kNone;
  std::vector<double> axis_values;

  std::vector<Algorithm> algorithms;
  std::vector<std::uint64_t> seeds{1};

  double epsilon = 1e-3;
  int max_iterations = 200;
  int rounding_trials = 200;
  bool record_timing = false;

  std::string output_dir = "results";

  // Throws PlanError.
  void Validate() const;
  bool operator==(const ExperimentPlan&) const = default;
};

// Generator settings with the desk-scale counts and sizes.
GenerationConfig DeskTinyConfig(int num_sbs, int num_users, int num_files);

// Rejects unknown keys. Powers may be given in dBm ("*_dbm") or watts
// ("*_w"), noise as a density ("noise_psd_dbm_per_hz") or a power
// ("noise_power_w"). Omitted physical values keep their defaults.
ExperimentPlan ParsePlan(const std::string& json_text);
ExperimentPlan LoadPlan(const std::string& path);
std::string PlanToJson(const ExperimentPlan& plan);
void SavePlan(const ExperimentPlan& plan, const std::string& path);

double DbmToWatts(double dbm);

inline constexpr int kResultsSchemaVersion = 1;

// One row of results.csv.
struct RunRecord {
  std::string run_id;
  SweepAxis axis = SweepAxis::kNone;
  double axis_value = 0;
  double theta = 0;
  Algorithm algorithm = Algorithm::kPuf;
  std::uint64_t seed = 0;
  // "ok", "infeasible" or "error".
  std::string status;
  // Solver status or failure message.
  std::string detail;
  double total_power_w = 0;
  double avg_delay_s = 0;
  double objective = 0;
  double objective_surrogate = 0;
  double upper_bound = 0;
  double lower_bound = 0;
  int iterations = 0;
  double wall_ms = 0;
  double power_tx_w = 0;  // amplifier factor included
  double power_ca_w = 0;
  double power_bh_w = 0;
  double power_circuit_w = 0;
  double delay_wireless_s = 0;
  double delay_backhaul_s = 0;
  double delta_p = 0;
  double delta_d = 0;
  double preference_divergence = 0;
  int num_sbs = 0;

  bool ok() const { return status == "ok"; }
};

struct PlanOutcome {
  std::vector<RunRecord> records;
  int failures = 0;
};

// Worker count from JDPO_WORKERS, else the hardware concurrency. Throws
// PlanError on a malformed value.
int WorkerCountFromEnv();

// Runs every (axis value x seed x theta x algorithm) combination in that
// nesting order and writes results.csv plus trace_<run_id>.csv for each
// decomposition run into plan.output_dir. Config problems throw PlanError
// before anything runs; per-run failures are recorded in the status column.
PlanOutcome RunPlan(const ExperimentPlan& plan, int workers);

// Scenario for one axis value and seed.
Scenario BuildScenario(const ExperimentPlan& plan, double axis_value, std::uint64_t seed);

void WriteResultsCsv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> ReadResultsCsv(std::istream& in);

struct SummaryRow {
  Algorithm algorithm = Algorithm::kPuf;
  double axis_value = 0;
  double theta = 0;
  int runs = 0;
  int ok_runs = 0;
  double power_mean = 0;
  double power_std = 0;
  double delay_mean = 0;
  double delay_std = 0;
  // Algorithms at the same axis value and theta that this one weakly beats
  // on mean power and mean delay at once.
  std::vector<Algorithm> dominates;
};

// Groups by (algorithm, axis value, theta) over seeds; std is the sample
// standard deviation, 0 for a single run. Throws PlanError on empty input.
std::vector<SummaryRow> Summarize(const std::vector<RunRecord>& records);
void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows);

// Spearman rank correlation with average ranks for ties.
double SpearmanCorrelation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace jdpo
