#include "jdpo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "jdpo/baselines.hpp"
#include "jdpo/gbd.hpp"
#include "json.hpp"

namespace jdpo {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw PlanError(path + ": " + what);
}

// Strips a trailing unit suffix so that "max_tx_power_mw" can be matched
// against "max_tx_power_w".
std::string Stem(const std::string& key) {
  for (const char* unit : {"_dbm_per_hz", "_dbm", "_w", "_mw", "_bits", "_bps", "_s", "_ms", "_hz",
                           "_m", "_km", "_db", "_per_km2", "_w_per_bit", "_w_per_bps"}) {
    const std::string u = unit;
    if (key.size() > u.size() && key.compare(key.size() - u.size(), u.size(), u) == 0) {
      return key.substr(0, key.size() - u.size());
    }
  }
  return key;
}

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) Fail(Label(), "expected an object");
  }

  bool Has(const std::string& key) const { return doc_.contains(key); }

  template <typename T>
  bool Read(const std::string& key, T* out) {
    if (!doc_.contains(key)) return false;
    seen_.insert(key);
    try {
      *out = doc_.at(key).get<T>();
    } catch (const json::exception&) {
      Fail(Child(key), "wrong type");
    }
    return true;
  }

  bool ReadNumber(const std::string& key, double* out) {
    if (!doc_.contains(key)) return false;
    seen_.insert(key);
    if (!doc_.at(key).is_number()) Fail(Child(key), "expected a number");
    *out = doc_.at(key).get<double>();
    return true;
  }

  bool ReadCount(const std::string& key, int* out) {
    if (!doc_.contains(key)) return false;
    seen_.insert(key);
    const json& v = doc_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) Fail(Child(key), "expected a nonnegative integer");
    *out = v.get<int>();
    return true;
  }

  Section Sub(const std::string& key) {
    seen_.insert(key);
    return Section(doc_.at(key), Child(key));
  }

  const json& Raw(const std::string& key) {
    seen_.insert(key);
    return doc_.at(key);
  }

  std::string Child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  // Call once every known key has been read.
  void Finish(const std::vector<std::string>& known_extra = {}) const {
    for (const auto& [key, value] : doc_.items()) {
      if (seen_.count(key)) continue;
      if (std::find(known_extra.begin(), known_extra.end(), key) != known_extra.end()) continue;
      for (const std::string& other : known_) {
        if (Stem(other) == Stem(key)) {
          Fail(Child(key), "unit suffix mismatch, expected " + other);
        }
      }
      Fail(Child(key), "unknown key");
    }
  }

  // Keys accepted somewhere in this section, used for unit-suffix hints.
  void Known(std::initializer_list<const char*> keys) {
    for (const char* k : keys) known_.emplace_back(k);
  }

 private:
  std::string Label() const { return path_.empty() ? "plan" : path_; }

  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
  std::vector<std::string> known_;
};

void ReadPhysical(Section sec, GenerationConfig* c) {
  sec.Known({"bandwidth_per_user_hz", "noise_power_w", "noise_psd_dbm_per_hz", "amplifier_factor",
             "pathloss_ref_db", "pathloss_exp_coeff", "shadowing_std_db", "max_tx_power_w",
             "max_tx_power_dbm", "cache_capacity_bits", "backhaul_capacity_bps", "circuit_power_w",
             "cache_coeff_w_per_bit", "backhaul_coeff_w_per_bps"});
  RadioConfig& r = c->radio;
  SbsSpec& b = c->sbs_template;
  sec.ReadNumber("bandwidth_per_user_hz", &r.bandwidth_per_user_hz);
  if (sec.Has("noise_power_w") && sec.Has("noise_psd_dbm_per_hz")) {
    Fail(sec.Child("noise_power_w"), "give either noise_power_w or noise_psd_dbm_per_hz");
  }
  double psd_dbm = 0;
  if (sec.ReadNumber("noise_psd_dbm_per_hz", &psd_dbm)) {
    r.noise_power_w = DbmToWatts(psd_dbm) * r.bandwidth_per_user_hz;
  }
  sec.ReadNumber("noise_power_w", &r.noise_power_w);
  sec.ReadNumber("amplifier_factor", &r.amplifier_factor);
  sec.ReadNumber("pathloss_ref_db", &r.pathloss_ref_db);
  sec.ReadNumber("pathloss_exp_coeff", &r.pathloss_exp_coeff);
  sec.ReadNumber("shadowing_std_db", &r.shadowing_std_db);
  if (sec.Has("max_tx_power_w") && sec.Has("max_tx_power_dbm")) {
    Fail(sec.Child("max_tx_power_w"), "give either max_tx_power_w or max_tx_power_dbm");
  }
  double p_dbm = 0;
  if (sec.ReadNumber("max_tx_power_dbm", &p_dbm)) b.max_tx_power_w = DbmToWatts(p_dbm);
  sec.ReadNumber("max_tx_power_w", &b.max_tx_power_w);
  sec.ReadNumber("cache_capacity_bits", &b.cache_capacity_bits);
  sec.ReadNumber("backhaul_capacity_bps", &b.backhaul_capacity_bps);
  sec.ReadNumber("circuit_power_w", &b.circuit_power_w);
  sec.ReadNumber("cache_coeff_w_per_bit", &b.cache_coeff_w_per_bit);
  sec.ReadNumber("backhaul_coeff_w_per_bps", &b.backhaul_coeff_w_per_bps);
  sec.Finish();
}

GenerationConfig ReadScenarioConfig(Section sec) {
  sec.Known({"preset", "num_sbs", "num_users", "num_files", "area_side_m", "sbs_intensity_per_km2",
             "user_intensity_per_km2", "file_size_min_bits", "file_size_max_bits", "rate_min_bps",
             "rate_max_bps", "preference_skew", "preference_global_weight", "backhaul_delay_mean_s",
             "backhaul_delay_min_s", "backhaul_delay_max_s", "pathloss_distance_unit_m",
             "min_distance_m", "physical"});
  std::string preset = "default";
  sec.Read("preset", &preset);
  GenerationConfig c;
  if (preset == "desk_tiny") {
    c = DeskTinyConfig(3, 4, 5);
  } else if (preset != "default") {
    Fail(sec.Child("preset"), "unknown preset '" + preset + "', expected default or desk_tiny");
  }
  int count = 0;
  if (sec.ReadCount("num_sbs", &count)) c.num_sbs = count;
  if (sec.ReadCount("num_users", &count)) c.num_users = count;
  sec.ReadCount("num_files", &c.num_files);
  sec.ReadNumber("area_side_m", &c.area_side_m);
  sec.ReadNumber("sbs_intensity_per_km2", &c.sbs_intensity_per_km2);
  sec.ReadNumber("user_intensity_per_km2", &c.user_intensity_per_km2);
  sec.ReadNumber("file_size_min_bits", &c.file_size_min_bits);
  sec.ReadNumber("file_size_max_bits", &c.file_size_max_bits);
  sec.ReadNumber("rate_min_bps", &c.rate_min_bps);
  sec.ReadNumber("rate_max_bps", &c.rate_max_bps);
  sec.ReadNumber("preference_skew", &c.preference_skew);
  sec.ReadNumber("preference_global_weight", &c.preference_global_weight);
  sec.ReadNumber("backhaul_delay_mean_s", &c.backhaul_delay_mean_s);
  sec.ReadNumber("backhaul_delay_min_s", &c.backhaul_delay_min_s);
  sec.ReadNumber("backhaul_delay_max_s", &c.backhaul_delay_max_s);
  sec.ReadNumber("pathloss_distance_unit_m", &c.pathloss_distance_unit_m);
  sec.ReadNumber("min_distance_m", &c.min_distance_m);
  if (sec.Has("physical")) ReadPhysical(sec.Sub("physical"), &c);
  sec.Finish();
  try {
    c.Validate();
  } catch (const std::invalid_argument& e) {
    Fail("scenario_config", e.what());
  }
  return c;
}

json ScenarioConfigJson(const GenerationConfig& c) {
  json physical = {
      {"bandwidth_per_user_hz", c.radio.bandwidth_per_user_hz},
      {"noise_power_w", c.radio.noise_power_w},
      {"amplifier_factor", c.radio.amplifier_factor},
      {"pathloss_ref_db", c.radio.pathloss_ref_db},
      {"pathloss_exp_coeff", c.radio.pathloss_exp_coeff},
      {"shadowing_std_db", c.radio.shadowing_std_db},
      {"max_tx_power_w", c.sbs_template.max_tx_power_w},
      {"cache_capacity_bits", c.sbs_template.cache_capacity_bits},
      {"backhaul_capacity_bps", c.sbs_template.backhaul_capacity_bps},
      {"circuit_power_w", c.sbs_template.circuit_power_w},
      {"cache_coeff_w_per_bit", c.sbs_template.cache_coeff_w_per_bit},
      {"backhaul_coeff_w_per_bps", c.sbs_template.backhaul_coeff_w_per_bps},
  };
  json out = {
      {"num_files", c.num_files},
      {"area_side_m", c.area_side_m},
      {"sbs_intensity_per_km2", c.sbs_intensity_per_km2},
      {"user_intensity_per_km2", c.user_intensity_per_km2},
      {"file_size_min_bits", c.file_size_min_bits},
      {"file_size_max_bits", c.file_size_max_bits},
      {"rate_min_bps", c.rate_min_bps},
      {"rate_max_bps", c.rate_max_bps},
      {"preference_skew", c.preference_skew},
      {"preference_global_weight", c.preference_global_weight},
      {"backhaul_delay_mean_s", c.backhaul_delay_mean_s},
      {"backhaul_delay_min_s", c.backhaul_delay_min_s},
      {"backhaul_delay_max_s", c.backhaul_delay_max_s},
      {"pathloss_distance_unit_m", c.pathloss_distance_unit_m},
      {"min_distance_m", c.min_distance_m},
      {"physical", physical},
  };
  if (c.num_sbs) out["num_sbs"] = *c.num_sbs;
  if (c.num_users) out["num_users"] = *c.num_users;
  return out;
}

std::string Sanitize(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
  }
  return s;
}

std::string FormatValue(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Pieces shared by every run on the same scenario.
struct Instance {
  double axis_value = 0;
  std::size_t point = 0;
  std::uint64_t seed = 0;
  std::optional<Scenario> scenario;
  double delta_p = 0;
  double delta_d = 0;
};

struct Task {
  const Instance* instance = nullptr;
  double theta = 0;
  std::size_t theta_index = 0;
  Algorithm algorithm = Algorithm::kPuf;
};

void FillMetrics(const Scenario& s, const Assignment& a, const ObjectiveWeights& w, RunRecord* r) {
  const ModelReport report = Evaluate(s, a, w);
  r->total_power_w = report.total_power_w();
  r->avg_delay_s = report.average_delay_s();
  r->objective = report.objective_value;
  r->power_tx_w = r->power_ca_w = r->power_bh_w = r->power_circuit_w = 0;
  for (const SbsPowerBreakdown& p : report.per_sbs_power_w) {
    r->power_tx_w += s.radio().amplifier_factor * p.transmit;
    r->power_ca_w += p.caching;
    r->power_bh_w += p.backhaul;
    r->power_circuit_w += p.circuit;
  }
  r->delay_wireless_s = r->delay_backhaul_s = 0;
  for (const UserDelayBreakdown& d : report.per_user_delay_s) {
    r->delay_wireless_s += d.wireless;
    r->delay_backhaul_s += d.backhaul;
  }
  if (!report.per_user_delay_s.empty()) {
    r->delay_wireless_s /= report.per_user_delay_s.size();
    r->delay_backhaul_s /= report.per_user_delay_s.size();
  }
}

std::string RunId(const Task& t) {
  std::ostringstream os;
  os << AlgorithmName(t.algorithm) << "_a" << t.instance->point << "_s" << t.instance->seed << "_t"
     << t.theta_index;
  return os.str();
}

RunRecord Execute(const ExperimentPlan& plan, const Task& task) {
  using Clock = std::chrono::steady_clock;
  const Instance& in = *task.instance;
  const Scenario& s = *in.scenario;
  RunRecord r;
  r.run_id = RunId(task);
  r.axis = plan.axis;
  r.axis_value = in.axis_value;
  r.theta = task.theta;
  r.algorithm = task.algorithm;
  r.seed = in.seed;
  r.delta_p = in.delta_p;
  r.delta_d = in.delta_d;
  r.preference_divergence = NormalizedPreferenceDivergence(s.preferences());
  r.num_sbs = s.num_sbs();
  r.upper_bound = r.lower_bound = r.objective_surrogate = kNaN;

  ObjectiveWeights w;
  w.theta = task.theta;
  w.delta_p = in.delta_p;
  w.delta_d = in.delta_d;

  const auto start = Clock::now();
  try {
    if (task.algorithm == Algorithm::kPuf || task.algorithm == Algorithm::kApuf) {
      GbdConfig config;
      config.epsilon = plan.epsilon;
      config.max_iterations = plan.max_iterations;
      config.master_mode = task.algorithm == Algorithm::kApuf ? MasterMode::kSdr : MasterMode::kExact;
      config.initial_seed = in.seed;
      config.sdr.seed = in.seed;
      config.sdr.rounding_trials = plan.rounding_trials;
      config.record_timing = plan.record_timing;
      const GbdResult g = RunGbd(s, w, config);
      r.detail = GbdStatusName(g.status);
      r.iterations = g.iterations;
      r.upper_bound = g.upper_bound;
      r.lower_bound = g.lower_bound;
      std::ofstream trace(std::filesystem::path(plan.output_dir) / ("trace_" + r.run_id + ".csv"));
      WriteTraceCsv(trace, g.trace);
      if (g.has_solution) {
        FillMetrics(s, g.best_assignment, w, &r);
        r.objective_surrogate = g.objective_surrogate;
        r.status = CheckFeasibility(s, g.best_assignment).empty() ? "ok" : "infeasible";
      } else {
        r.status = "infeasible";
      }
    } else {
      PolicyResult p;
      if (task.algorithm == Algorithm::kCcp) {
        p = CcpPolicy(s, w);
      } else if (task.algorithm == Algorithm::kDf) {
        p = DfPolicy(s, w);
      } else {
        OracleResult o = ExhaustiveOracle(s, w, FitParams(s, DefaultAnchorPowers(s)));
        r.iterations = o.associations_enumerated;
        p = std::move(o.surrogate);
        p.feasible = p.feasible && std::isfinite(p.objective_surrogate);
      }
      r.detail = p.message;
      if (p.assignment.association.size() > 0 && p.assignment.association.rowwise().sum().minCoeff() == 1) {
        FillMetrics(s, p.assignment, w, &r);
      }
      r.objective_surrogate = p.objective_surrogate;
      r.status = p.feasible ? "ok" : "infeasible";
    }
  } catch (const std::exception& e) {
    r.status = "error";
    r.detail = e.what();
  }
  r.detail = Sanitize(r.detail);
  if (plan.record_timing) {
    r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  }
  return r;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s) {
  if (s == "nan" || s == "-nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw PlanError("results: malformed number '" + s + "'");
  }
}

std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

const char* SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNone:
      return "none";
    case SweepAxis::kTheta:
      return "theta";
    case SweepAxis::kCache:
      return "cache";
    case SweepAxis::kDensity:
      return "density";
    case SweepAxis::kPreferenceQ:
      return "preference_q";
  }
  return "none";
}

const char* AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kPuf:
      return "puf";
    case Algorithm::kApuf:
      return "apuf";
    case Algorithm::kCcp:
      return "ccp";
    case Algorithm::kDf:
      return "df";
    case Algorithm::kOracle:
      return "oracle";
  }
  return "puf";
}

SweepAxis ParseSweepAxis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kNone, SweepAxis::kTheta, SweepAxis::kCache, SweepAxis::kDensity,
                      SweepAxis::kPreferenceQ}) {
    if (name == SweepAxisName(a)) return a;
  }
  throw PlanError("sweep.axis: unknown axis '" + name +
                  "', expected none, theta, cache, density or preference_q");
}

Algorithm ParseAlgorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kPuf, Algorithm::kApuf, Algorithm::kCcp, Algorithm::kDf, Algorithm::kOracle}) {
    if (name == AlgorithmName(a)) return a;
  }
  throw PlanError("algorithms: unknown algorithm '" + name + "', expected puf, apuf, ccp, df or oracle");
}

double DbmToWatts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

GenerationConfig DeskTinyConfig(int num_sbs, int num_users, int num_files) {
  return GenerationConfig::DeskTiny(num_sbs, num_users, num_files, 1);
}

void ExperimentPlan::Validate() const {
  if (scenario_config.has_value() == !scenario_file.empty()) {
    throw PlanError("plan: give exactly one of scenario_config and scenario_file");
  }
  if (scenario_config) {
    try {
      scenario_config->Validate();
    } catch (const std::invalid_argument& e) {
      throw PlanError(std::string("scenario_config: ") + e.what());
    }
  }
  if (thetas.empty()) throw PlanError("weights.theta: empty");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] >= 0 && thetas[i] <= 1)) {
      throw PlanError("weights.theta[" + std::to_string(i) + "]: " + FormatValue(thetas[i]) +
                      " outside [0, 1]");
    }
  }
  if (!(delta_p > 0)) throw PlanError("weights.delta_p: must be positive");
  if (!(delta_d > 0)) throw PlanError("weights.delta_d: must be positive");
  if (axis == SweepAxis::kNone) {
    if (!axis_values.empty()) throw PlanError("sweep.values: must be empty when axis is none");
  } else {
    if (axis_values.empty()) throw PlanError("sweep.values: empty");
    for (std::size_t i = 0; i < axis_values.size(); ++i) {
      const double v = axis_values[i];
      const std::string where = "sweep.values[" + std::to_string(i) + "]";
      if (i > 0 && !(v > axis_values[i - 1])) throw PlanError(where + ": values must be strictly increasing");
      if ((axis == SweepAxis::kTheta || axis == SweepAxis::kPreferenceQ) && !(v >= 0 && v <= 1)) {
        throw PlanError(where + ": " + FormatValue(v) + " outside [0, 1]");
      }
      if ((axis == SweepAxis::kCache || axis == SweepAxis::kDensity) && !(v > 0)) {
        throw PlanError(where + ": must be positive");
      }
    }
    if ((axis == SweepAxis::kDensity || axis == SweepAxis::kPreferenceQ) && !scenario_config) {
      throw PlanError(std::string("sweep.axis: ") + SweepAxisName(axis) + " needs scenario_config");
    }
  }
  if (algorithms.empty()) throw PlanError("algorithms: empty");
  if (std::set<Algorithm>(algorithms.begin(), algorithms.end()).size() != algorithms.size()) {
    throw PlanError("algorithms: duplicate entry");
  }
  if (seeds.empty()) throw PlanError("seeds: empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw PlanError("seeds: duplicate entry");
  }
  if (!(epsilon > 0)) throw PlanError("solver.epsilon: must be positive");
  if (max_iterations < 1) throw PlanError("solver.max_iterations: must be at least 1");
  if (rounding_trials < 1) throw PlanError("solver.rounding_trials: must be at least 1");
  if (output_dir.empty()) throw PlanError("output_dir: empty");
}

ExperimentPlan ParsePlan(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw PlanError(std::string("plan: malformed document: ") + e.what());
  }
  ExperimentPlan plan;
  Section top(doc, "");
  top.Known({"scenario_config", "scenario_file", "weights", "sweep", "algorithms", "seeds", "solver",
             "output_dir"});
  if (top.Has("scenario_config")) plan.scenario_config = ReadScenarioConfig(top.Sub("scenario_config"));
  top.Read("scenario_file", &plan.scenario_file);
  if (top.Has("weights")) {
    Section w = top.Sub("weights");
    w.Known({"theta", "delta_p", "delta_d", "auto_normalize"});
    if (w.Has("theta")) {
      const json& t = w.Raw("theta");
      plan.thetas.clear();
      if (t.is_number()) {
        plan.thetas.push_back(t.get<double>());
      } else if (t.is_array()) {
        for (const json& v : t) {
          if (!v.is_number()) Fail("weights.theta", "expected numbers");
          plan.thetas.push_back(v.get<double>());
        }
      } else {
        Fail("weights.theta", "expected a number or a list of numbers");
      }
    }
    w.ReadNumber("delta_p", &plan.delta_p);
    w.ReadNumber("delta_d", &plan.delta_d);
    w.Read("auto_normalize", &plan.auto_normalize);
    w.Finish();
  }
  if (top.Has("sweep")) {
    Section sw = top.Sub("sweep");
    sw.Known({"axis", "values"});
    std::string axis = "none";
    sw.Read("axis", &axis);
    plan.axis = ParseSweepAxis(axis);
    sw.Read("values", &plan.axis_values);
    sw.Finish();
  }
  if (top.Has("algorithms")) {
    std::vector<std::string> names;
    top.Read("algorithms", &names);
    for (const std::string& n : names) plan.algorithms.push_back(ParseAlgorithm(n));
  }
  top.Read("seeds", &plan.seeds);
  if (top.Has("solver")) {
    Section so = top.Sub("solver");
    so.Known({"epsilon", "max_iterations", "rounding_trials", "record_timing"});
    so.ReadNumber("epsilon", &plan.epsilon);
    so.ReadCount("max_iterations", &plan.max_iterations);
    so.ReadCount("rounding_trials", &plan.rounding_trials);
    so.Read("record_timing", &plan.record_timing);
    so.Finish();
  }
  top.Read("output_dir", &plan.output_dir);
  top.Finish();
  plan.Validate();
  return plan;
}

ExperimentPlan LoadPlan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PlanError(path + ": cannot open plan file");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParsePlan(buf.str());
}

std::string PlanToJson(const ExperimentPlan& plan) {
  json doc;
  if (plan.scenario_config) doc["scenario_config"] = ScenarioConfigJson(*plan.scenario_config);
  if (!plan.scenario_file.empty()) doc["scenario_file"] = plan.scenario_file;
  doc["weights"] = {{"theta", plan.thetas},
                    {"delta_p", plan.delta_p},
                    {"delta_d", plan.delta_d},
                    {"auto_normalize", plan.auto_normalize}};
  doc["sweep"] = {{"axis", SweepAxisName(plan.axis)}, {"values", plan.axis_values}};
  json algos = json::array();
  for (Algorithm a : plan.algorithms) algos.push_back(AlgorithmName(a));
  doc["algorithms"] = algos;
  doc["seeds"] = plan.seeds;
  doc["solver"] = {{"epsilon", plan.epsilon},
                   {"max_iterations", plan.max_iterations},
                   {"rounding_trials", plan.rounding_trials},
                   {"record_timing", plan.record_timing}};
  doc["output_dir"] = plan.output_dir;
  return doc.dump(2);
}

void SavePlan(const ExperimentPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PlanError(path + ": cannot write plan file");
  out << PlanToJson(plan) << '\n';
}

int WorkerCountFromEnv() {
  if (const char* env = std::getenv("JDPO_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1 || n > 4096) {
      throw PlanError(std::string("JDPO_WORKERS: expected a positive integer, got '") + env + "'");
    }
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Scenario BuildScenario(const ExperimentPlan& plan, double axis_value, std::uint64_t seed) {
  if (!plan.scenario_file.empty()) {
    std::ifstream in(plan.scenario_file);
    if (!in) throw PlanError("scenario_file: cannot open " + plan.scenario_file);
    std::stringstream buf;
    buf << in.rdbuf();
    Scenario s = [&] {
      try {
        return ScenarioFromJson(buf.str());
      } catch (const std::exception& e) {
        throw PlanError("scenario_file: " + std::string(e.what()));
      }
    }();
    return plan.axis == SweepAxis::kCache ? s.WithCacheCapacity(axis_value) : s;
  }
  GenerationConfig c = *plan.scenario_config;
  c.seed = seed;
  if (plan.axis == SweepAxis::kDensity) {
    const double area_km2 = c.area_side_m * c.area_side_m * 1e-6;
    c.num_sbs = std::max(1, static_cast<int>(std::lround(axis_value * area_km2)));
  } else if (plan.axis == SweepAxis::kPreferenceQ) {
    c.preference_global_weight = 1.0 - axis_value;
  }
  Scenario s = GenerateScenario(c);
  return plan.axis == SweepAxis::kCache ? s.WithCacheCapacity(axis_value) : s;
}

PlanOutcome RunPlan(const ExperimentPlan& plan, int workers) {
  plan.Validate();
  const std::vector<double> points =
      plan.axis == SweepAxis::kNone ? std::vector<double>{0.0} : plan.axis_values;
  const bool wants_oracle =
      std::find(plan.algorithms.begin(), plan.algorithms.end(), Algorithm::kOracle) != plan.algorithms.end();
  const OracleLimits caps;

  std::vector<Instance> instances;
  instances.reserve(points.size() * plan.seeds.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::uint64_t seed : plan.seeds) {
      Instance in;
      in.axis_value = points[p];
      in.point = p;
      in.seed = seed;
      try {
        in.scenario = BuildScenario(plan, points[p], seed);
      } catch (const PlanError&) {
        throw;
      } catch (const std::exception& e) {
        throw PlanError("scenario_config: " + std::string(e.what()));
      }
      const Scenario& s = *in.scenario;
      if (wants_oracle && (s.num_users() * s.num_sbs() > caps.max_pairs ||
                           s.num_sbs() * s.num_files() > caps.max_placement_bits)) {
        throw PlanError("algorithms: oracle refused at axis value " + FormatValue(points[p]) + ", seed " +
                        std::to_string(seed) + " (U*B = " + std::to_string(s.num_users() * s.num_sbs()) +
                        ", B*F = " + std::to_string(s.num_sbs() * s.num_files()) + ")");
      }
      in.delta_p = plan.delta_p;
      in.delta_d = plan.delta_d;
      if (plan.auto_normalize) {
        ObjectiveWeights base;
        base.delta_p = plan.delta_p;
        base.delta_d = plan.delta_d;
        const PolicyResult ccp = CcpPolicy(s, base);
        double delay = 0;
        for (const UserDelayBreakdown& d : ccp.report.per_user_delay_s) delay += d.total;
        const double power = ccp.report.total_power_w();
        // Without a usable CCP point the configured weights stay.
        if (ccp.feasible && power > 0 && delay > 0 && std::isfinite(delay)) {
          in.delta_p = 1.0 / power;
          in.delta_d = 1.0 / delay;
        }
      }
      instances.push_back(std::move(in));
    }
  }

  std::vector<Task> tasks;
  for (const Instance& in : instances) {
    const std::vector<double> thetas =
        plan.axis == SweepAxis::kTheta ? std::vector<double>{in.axis_value} : plan.thetas;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      for (Algorithm a : plan.algorithms) tasks.push_back({&in, thetas[t], t, a});
    }
  }

  std::filesystem::create_directories(plan.output_dir);
  PlanOutcome outcome;
  outcome.records.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      outcome.records[k] = Execute(plan, tasks[k]);
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (const RunRecord& r : outcome.records) outcome.failures += r.ok() ? 0 : 1;
  std::ofstream out(std::filesystem::path(plan.output_dir) / "results.csv");
  WriteResultsCsv(out, outcome.records);
  return outcome;
}

namespace {

const char* const kResultColumns[] = {
    "schema_version", "run_id",        "axis",           "axis_value",       "theta",
    "algorithm",      "seed",          "status",         "detail",           "total_power_w",
    "avg_delay_s",    "objective",     "objective_surrogate", "upper_bound", "lower_bound",
    "iterations",     "wall_ms",       "power_tx_w",     "power_ca_w",       "power_bh_w",
    "power_circuit_w", "delay_wireless_s", "delay_backhaul_s", "delta_p",     "delta_d",
    "preference_divergence", "num_sbs"};

}  // namespace

void WriteResultsCsv(std::ostream& out, const std::vector<RunRecord>& records) {
  for (std::size_t c = 0; c < std::size(kResultColumns); ++c) out << (c ? "," : "") << kResultColumns[c];
  out << '\n';
  const auto old = out.precision(17);
  for (const RunRecord& r : records) {
    out << kResultsSchemaVersion << ',' << r.run_id << ',' << SweepAxisName(r.axis) << ',' << r.axis_value
        << ',' << r.theta << ',' << AlgorithmName(r.algorithm) << ',' << r.seed << ',' << r.status << ','
        << r.detail << ',' << r.total_power_w << ',' << r.avg_delay_s << ',' << r.objective << ','
        << r.objective_surrogate << ',' << r.upper_bound << ',' << r.lower_bound << ',' << r.iterations << ','
        << r.wall_ms << ',' << r.power_tx_w << ',' << r.power_ca_w << ',' << r.power_bh_w << ','
        << r.power_circuit_w << ',' << r.delay_wireless_s << ',' << r.delay_backhaul_s << ',' << r.delta_p
        << ',' << r.delta_d << ',' << r.preference_divergence << ',' << r.num_sbs << '\n';
  }
  out.precision(old);
}

std::vector<RunRecord> ReadResultsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw PlanError("results: empty input");
  const std::vector<std::string> header = SplitCsvLine(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
  for (const char* name : kResultColumns) {
    if (!col.count(name)) throw PlanError(std::string("results: missing column ") + name);
  }
  std::vector<RunRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitCsvLine(line);
    if (f.size() != header.size()) {
      throw PlanError("results: line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    if (get("schema_version") != std::to_string(kResultsSchemaVersion)) {
      throw PlanError("results: unsupported schema_version " + get("schema_version"));
    }
    RunRecord r;
    r.run_id = get("run_id");
    r.axis = ParseSweepAxis(get("axis"));
    r.axis_value = ParseDouble(get("axis_value"));
    r.theta = ParseDouble(get("theta"));
    r.algorithm = ParseAlgorithm(get("algorithm"));
    r.seed = std::stoull(get("seed"));
    r.status = get("status");
    r.detail = get("detail");
    r.total_power_w = ParseDouble(get("total_power_w"));
    r.avg_delay_s = ParseDouble(get("avg_delay_s"));
    r.objective = ParseDouble(get("objective"));
    r.objective_surrogate = ParseDouble(get("objective_surrogate"));
    r.upper_bound = ParseDouble(get("upper_bound"));
    r.lower_bound = ParseDouble(get("lower_bound"));
    r.iterations = std::stoi(get("iterations"));
    r.wall_ms = ParseDouble(get("wall_ms"));
    r.power_tx_w = ParseDouble(get("power_tx_w"));
    r.power_ca_w = ParseDouble(get("power_ca_w"));
    r.power_bh_w = ParseDouble(get("power_bh_w"));
    r.power_circuit_w = ParseDouble(get("power_circuit_w"));
    r.delay_wireless_s = ParseDouble(get("delay_wireless_s"));
    r.delay_backhaul_s = ParseDouble(get("delay_backhaul_s"));
    r.delta_p = ParseDouble(get("delta_p"));
    r.delta_d = ParseDouble(get("delta_d"));
    r.preference_divergence = ParseDouble(get("preference_divergence"));
    r.num_sbs = std::stoi(get("num_sbs"));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SummaryRow> Summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw PlanError("results: no runs to summarize");
  using Key = std::tuple<double, double, Algorithm>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : records) groups[{r.axis_value, r.theta, r.algorithm}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, runs] : groups) {
    SummaryRow row;
    std::tie(row.axis_value, row.theta, row.algorithm) = key;
    row.runs = static_cast<int>(runs.size());
    std::vector<double> power, delay;
    for (const RunRecord* r : runs) {
      if (!r->ok()) continue;
      power.push_back(r->total_power_w);
      delay.push_back(r->avg_delay_s);
    }
    row.ok_runs = static_cast<int>(power.size());
    auto mean_std = [](const std::vector<double>& v, double* mean, double* sd) {
      if (v.empty()) {
        *mean = *sd = kNaN;
        return;
      }
      double m = 0;
      for (double x : v) m += x;
      m /= v.size();
      double ss = 0;
      for (double x : v) ss += (x - m) * (x - m);
      *mean = m;
      *sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
    };
    mean_std(power, &row.power_mean, &row.power_std);
    mean_std(delay, &row.delay_mean, &row.delay_std);
    rows.push_back(row);
  }
  for (SummaryRow& a : rows) {
    if (a.ok_runs == 0) continue;
    for (const SummaryRow& b : rows) {
      if (&a == &b || b.ok_runs == 0 || b.axis_value != a.axis_value || b.theta != a.theta) continue;
      if (a.power_mean <= b.power_mean && a.delay_mean <= b.delay_mean) a.dominates.push_back(b.algorithm);
    }
  }
  return rows;
}

void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "algorithm,axis_value,theta,runs,ok_runs,power_mean_w,power_std_w,delay_mean_s,delay_std_s,"
         "dominates\n";
  const auto old = out.precision(17);
  for (const SummaryRow& r : rows) {
    out << AlgorithmName(r.algorithm) << ',' << r.axis_value << ',' << r.theta << ',' << r.runs << ','
        << r.ok_runs << ',' << r.power_mean << ',' << r.power_std << ',' << r.delay_mean << ','
        << r.delay_std << ',';
    for (std::size_t k = 0; k < r.dominates.size(); ++k) out << (k ? ";" : "") << AlgorithmName(r.dominates[k]);
    out << '\n';
  }
  out.precision(old);
}

double SpearmanCorrelation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("need two equal-length samples");
  const std::vector<double> ra = Ranks(a), rb = Ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1) / 2;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0 || sbb == 0) return kNaN;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace jdpo
