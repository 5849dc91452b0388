#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jdpo/common.hpp"

namespace jdpo {

// Radio parameters shared by every link in the network.
struct RadioConfig {
  double bandwidth_per_user_hz = 200e3;
  // -174 dBm/Hz integrated over one 200 kHz subchannel.
  double noise_power_w = 7.962143411069940e-16;
  double amplifier_factor = 4.7;
  double pathloss_ref_db = 140.0;
  double pathloss_exp_coeff = 36.7;
  double shadowing_std_db = 4.0;

  // Throws std::invalid_argument when a field is out of range.
  void Validate() const;
  bool operator==(const RadioConfig&) const = default;
};

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
  bool operator==(const Position&) const = default;
};

struct SbsSpec {
  Position position;
  double max_tx_power_w = 1.0;
  double cache_capacity_bits = 2.4e11;
  double backhaul_capacity_bps = 1e9;
  double circuit_power_w = 5.1;
  double cache_coeff_w_per_bit = 6e-12;
  double backhaul_coeff_w_per_bps = 4e-8;
  double backhaul_delay_s = 1.75;
  bool operator==(const SbsSpec&) const = default;
};

struct FileSpec {
  double size_bits = 0.0;
  double rate_requirement_bps = 0.0;
};

struct UserSpec {
  Position position;
  std::vector<double> preferences;
};

// An immutable network instance. Construction validates every invariant.
class Scenario {
 public:
  Scenario(RadioConfig radio, std::vector<SbsSpec> sbss,
           std::vector<UserSpec> users, std::vector<FileSpec> files,
           Matrix gains, std::uint64_t rng_seed);

  const RadioConfig& radio() const { return radio_; }
  const std::vector<SbsSpec>& sbss() const { return sbss_; }
  const std::vector<UserSpec>& users() const { return users_; }
  const std::vector<FileSpec>& files() const { return files_; }
  const Matrix& gains() const { return gains_; }
  std::uint64_t rng_seed() const { return rng_seed_; }

  int num_sbs() const { return static_cast<int>(sbss_.size()); }
  int num_users() const { return static_cast<int>(users_.size()); }
  int num_files() const { return static_cast<int>(files_.size()); }

  const SbsSpec& sbs(int j) const { return sbss_[j]; }
  const FileSpec& file(int k) const { return files_[k]; }
  double gain(int i, int j) const { return gains_(i, j); }
  double preference(int i, int k) const { return prefs_(i, k); }
  // U x F matrix of q_ik.
  const Matrix& preferences() const { return prefs_; }

  // R_i = sum_k q_ik r_k.
  double rate_requirement(int i) const { return rate_req_(i); }
  // S_i = sum_k q_ik s_k.
  double mean_file_size(int i) const { return mean_size_(i); }

  // Copy with every SBS cache set to `bits`.
  Scenario WithCacheCapacity(double bits) const;

 private:
  RadioConfig radio_;
  std::vector<SbsSpec> sbss_;
  std::vector<UserSpec> users_;
  std::vector<FileSpec> files_;
  Matrix gains_;
  Matrix prefs_;
  Vector rate_req_;
  Vector mean_size_;
  std::uint64_t rng_seed_;
};

struct GenerationConfig {
  double area_side_m = 250.0;
  // Fixed counts place nodes uniformly. Without a count, the number of nodes
  // is Poisson with mean intensity * area.
  std::optional<int> num_sbs;
  std::optional<int> num_users;
  double sbs_intensity_per_km2 = 800.0;
  double user_intensity_per_km2 = 4000.0;

  int num_files = 1000;
  double file_size_min_bits = 8e7;
  double file_size_max_bits = 2.4e9;
  double rate_min_bps = 0.5e6;
  double rate_max_bps = 2e6;

  double preference_skew = 1.0;
  // Weight of the shared Zipf ranking in each user's preference row.
  double preference_global_weight = 0.5;

  RadioConfig radio;
  // Template for every SBS. Position and backhaul delay are overwritten.
  SbsSpec sbs_template;
  double backhaul_delay_mean_s = 1.75;
  double backhaul_delay_min_s = 0.5;
  double backhaul_delay_max_s = 3.0;

  // Distance unit fed to the pathloss formula, in meters. 1000 means the
  // formula takes kilometers.
  double pathloss_distance_unit_m = 1000.0;
  double min_distance_m = 1.0;

  std::uint64_t seed = 1;

  // Small instances that the exhaustive oracle can handle.
  static GenerationConfig DeskTiny(int num_sbs, int num_users, int num_files,
                                   std::uint64_t seed);

  void Validate() const;
  bool operator==(const GenerationConfig&) const = default;
};

// Linear gain for a distance expressed in the pathloss formula's unit.
double PathlossGain(double distance, double ref_db, double exp_coeff);

Scenario GenerateScenario(const GenerationConfig& config);

// Mixture of a global Zipf(skew) row and a per-user randomly permuted
// Zipf(skew) row.
Matrix GeneratePreferences(int num_users, int num_files, double skew,
                           double global_weight, std::uint64_t seed);

// Sum over files of the across-user variance of q_ik.
double PreferenceDivergence(const Matrix& prefs);
// Largest divergence a U x F preference matrix can reach.
double MaxPreferenceDivergence(int num_users, int num_files);
double NormalizedPreferenceDivergence(const Matrix& prefs);

std::string ScenarioToJson(const Scenario& scenario);
Scenario ScenarioFromJson(const std::string& text);

}  // namespace jdpo
