#include "jdpo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace jdpo {
namespace {

using nlohmann::json;

void Require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Independent streams so that adding draws to one quantity does not shift
// the others.
std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

int DrawCount(const std::optional<int>& fixed, double intensity_per_km2,
              double area_km2, std::mt19937_64& rng) {
  if (fixed) return *fixed;
  std::poisson_distribution<int> dist(intensity_per_km2 * area_km2);
  return dist(rng);
}

Vector ZipfRow(int num_files, double skew) {
  Vector row(num_files);
  for (int r = 0; r < num_files; ++r) row(r) = std::pow(r + 1.0, -skew);
  return row / row.sum();
}

json PositionJson(const Position& p) { return json::array({p.x_m, p.y_m}); }

Position PositionFrom(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

void RadioConfig::Validate() const {
  Require(bandwidth_per_user_hz > 0, "bandwidth_per_user_hz must be positive");
  Require(noise_power_w > 0, "noise_power_w must be positive");
  Require(amplifier_factor >= 1, "amplifier_factor must be at least 1");
  Require(pathloss_ref_db > 0, "pathloss_ref_db must be positive");
  Require(pathloss_exp_coeff > 0, "pathloss_exp_coeff must be positive");
  // Zero disables shadowing.
  Require(shadowing_std_db >= 0, "shadowing_std_db must be nonnegative");
}

Scenario::Scenario(RadioConfig radio, std::vector<SbsSpec> sbss,
                   std::vector<UserSpec> users, std::vector<FileSpec> files,
                   Matrix gains, std::uint64_t rng_seed)
    : radio_(radio),
      sbss_(std::move(sbss)),
      users_(std::move(users)),
      files_(std::move(files)),
      gains_(std::move(gains)),
      rng_seed_(rng_seed) {
  radio_.Validate();
  Require(!sbss_.empty(), "scenario needs at least one SBS");
  Require(!users_.empty(), "scenario needs at least one user");
  Require(!files_.empty(), "scenario needs at least one file");
  const int B = num_sbs(), U = num_users(), F = num_files();
  Require(gains_.rows() == U && gains_.cols() == B,
          "gain matrix must be users x SBSs");
  Require((gains_.array() > 0).all() && gains_.allFinite(),
          "gains must be positive and finite");
  for (const SbsSpec& s : sbss_) {
    Require(s.max_tx_power_w > 0, "max_tx_power_w must be positive");
    Require(s.backhaul_delay_s > 0, "backhaul_delay_s must be positive");
    Require(s.cache_capacity_bits >= 0 && s.backhaul_capacity_bps >= 0 &&
                s.circuit_power_w >= 0 && s.cache_coeff_w_per_bit >= 0 &&
                s.backhaul_coeff_w_per_bps >= 0,
            "SBS parameters must be nonnegative");
  }
  for (const FileSpec& f : files_) {
    Require(f.size_bits > 0, "size_bits must be positive");
    Require(f.rate_requirement_bps > 0, "rate_requirement_bps must be positive");
  }
  prefs_.resize(U, F);
  for (int i = 0; i < U; ++i) {
    const auto& q = users_[i].preferences;
    Require(static_cast<int>(q.size()) == F,
            "preference row length must equal the number of files");
    double sum = 0;
    for (int k = 0; k < F; ++k) {
      Require(q[k] >= 0 && q[k] <= 1, "preferences must lie in [0, 1]");
      prefs_(i, k) = q[k];
      sum += q[k];
    }
    Require(std::abs(sum - 1.0) <= 1e-9, "preferences must sum to 1");
  }
  Vector sizes(F), rates(F);
  for (int k = 0; k < F; ++k) {
    sizes(k) = files_[k].size_bits;
    rates(k) = files_[k].rate_requirement_bps;
  }
  rate_req_ = prefs_ * rates;
  mean_size_ = prefs_ * sizes;
}

Scenario Scenario::WithCacheCapacity(double bits) const {
  std::vector<SbsSpec> sbss = sbss_;
  for (SbsSpec& s : sbss) s.cache_capacity_bits = bits;
  return Scenario(radio_, std::move(sbss), users_, files_, gains_, rng_seed_);
}

GenerationConfig GenerationConfig::DeskTiny(int num_sbs, int num_users,
                                            int num_files, std::uint64_t seed) {
  GenerationConfig c;
  c.area_side_m = 200.0;
  c.num_sbs = num_sbs;
  c.num_users = num_users;
  c.num_files = num_files;
  c.file_size_min_bits = 1e6;
  c.file_size_max_bits = 4e6;
  c.rate_min_bps = 30e3;
  c.rate_max_bps = 120e3;
  c.sbs_template.cache_capacity_bits = 5e6;
  c.seed = seed;
  return c;
}

void GenerationConfig::Validate() const {
  radio.Validate();
  Require(area_side_m > 0, "area_side_m must be positive");
  Require(!num_sbs || *num_sbs >= 0, "num_sbs must be nonnegative");
  Require(!num_users || *num_users >= 0, "num_users must be nonnegative");
  Require(sbs_intensity_per_km2 >= 0 && user_intensity_per_km2 >= 0,
          "intensities must be nonnegative");
  Require(num_files > 0, "num_files must be positive");
  Require(file_size_min_bits > 0 && file_size_max_bits >= file_size_min_bits,
          "file size range is invalid");
  Require(rate_min_bps > 0 && rate_max_bps >= rate_min_bps,
          "rate range is invalid");
  Require(preference_skew >= 0, "preference_skew must be nonnegative");
  Require(preference_global_weight >= 0 && preference_global_weight <= 1,
          "preference_global_weight must lie in [0, 1]");
  Require(backhaul_delay_mean_s > 0, "backhaul_delay_mean_s must be positive");
  Require(backhaul_delay_min_s > 0 && backhaul_delay_max_s >= backhaul_delay_min_s,
          "backhaul delay range is invalid");
  Require(pathloss_distance_unit_m > 0, "pathloss_distance_unit_m must be positive");
  Require(min_distance_m > 0, "min_distance_m must be positive");
}

double PathlossGain(double distance, double ref_db, double exp_coeff) {
  const double loss_db = ref_db + exp_coeff * std::log10(distance);
  return std::pow(10.0, -loss_db / 10.0);
}

Scenario GenerateScenario(const GenerationConfig& config) {
  config.Validate();
  const double area_km2 = config.area_side_m * config.area_side_m * 1e-6;
  auto count_rng = Stream(config.seed, 1);
  const int B = DrawCount(config.num_sbs, config.sbs_intensity_per_km2, area_km2, count_rng);
  const int U = DrawCount(config.num_users, config.user_intensity_per_km2, area_km2, count_rng);
  if (B == 0) throw std::invalid_argument("generated scenario has zero SBSs");
  if (U == 0) throw std::invalid_argument("generated scenario has zero users");
  const int F = config.num_files;

  auto pos_rng = Stream(config.seed, 2);
  std::uniform_real_distribution<double> coord(0.0, config.area_side_m);
  std::vector<SbsSpec> sbss(B, config.sbs_template);
  for (SbsSpec& s : sbss) s.position = {coord(pos_rng), coord(pos_rng)};
  std::vector<UserSpec> users(U);
  for (UserSpec& u : users) u.position = {coord(pos_rng), coord(pos_rng)};

  auto delay_rng = Stream(config.seed, 3);
  std::exponential_distribution<double> delay(1.0 / config.backhaul_delay_mean_s);
  for (SbsSpec& s : sbss) {
    s.backhaul_delay_s = std::clamp(delay(delay_rng), config.backhaul_delay_min_s,
                                    config.backhaul_delay_max_s);
  }

  auto file_rng = Stream(config.seed, 4);
  std::uniform_real_distribution<double> size(config.file_size_min_bits,
                                              config.file_size_max_bits);
  std::uniform_real_distribution<double> rate(config.rate_min_bps, config.rate_max_bps);
  std::vector<FileSpec> files(F);
  for (FileSpec& f : files) {
    f.size_bits = size(file_rng);
    f.rate_requirement_bps = rate(file_rng);
  }

  auto shadow_rng = Stream(config.seed, 5);
  std::normal_distribution<double> shadow(0.0, 1.0);
  Matrix gains(U, B);
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      const double dx = users[i].position.x_m - sbss[j].position.x_m;
      const double dy = users[i].position.y_m - sbss[j].position.y_m;
      const double d = std::max(std::hypot(dx, dy), config.min_distance_m);
      const double shadow_db = config.radio.shadowing_std_db * shadow(shadow_rng);
      gains(i, j) = PathlossGain(d / config.pathloss_distance_unit_m,
                                 config.radio.pathloss_ref_db,
                                 config.radio.pathloss_exp_coeff) *
                    std::pow(10.0, shadow_db / 10.0);
    }
  }

  const Matrix prefs = GeneratePreferences(U, F, config.preference_skew,
                                           config.preference_global_weight,
                                           config.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int i = 0; i < U; ++i) {
    users[i].preferences.assign(prefs.row(i).data(), prefs.row(i).data() + F);
    // Renormalize in the stored precision.
    double sum = std::accumulate(users[i].preferences.begin(), users[i].preferences.end(), 0.0);
    for (double& q : users[i].preferences) q /= sum;
  }
  return Scenario(config.radio, std::move(sbss), std::move(users), std::move(files),
                  std::move(gains), config.seed);
}

Matrix GeneratePreferences(int num_users, int num_files, double skew,
                           double global_weight, std::uint64_t seed) {
  if (num_files <= 0) throw std::invalid_argument("num_files must be positive");
  Require(num_users >= 0, "num_users must be nonnegative");
  Require(skew >= 0, "skew must be nonnegative");
  Require(global_weight >= 0 && global_weight <= 1, "global_weight must lie in [0, 1]");
  const Vector zipf = ZipfRow(num_files, skew);
  auto rng = Stream(seed, 6);
  Matrix prefs(num_users, num_files);
  std::vector<int> perm(num_files);
  for (int i = 0; i < num_users; ++i) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int k = 0; k < num_files; ++k) {
      prefs(i, k) = global_weight * zipf(k) + (1.0 - global_weight) * zipf(perm[k]);
    }
  }
  return prefs;
}

double PreferenceDivergence(const Matrix& prefs) {
  const double U = static_cast<double>(prefs.rows());
  if (prefs.rows() == 0) return 0.0;
  const Eigen::RowVectorXd mean = prefs.colwise().mean();
  return (prefs.rowwise() - mean).squaredNorm() / U;
}

double MaxPreferenceDivergence(int num_users, int num_files) {
  return 1.0 - 1.0 / std::min(num_users, num_files);
}

double NormalizedPreferenceDivergence(const Matrix& prefs) {
  const double max = MaxPreferenceDivergence(prefs.rows(), prefs.cols());
  if (max <= 0) return 0.0;
  return PreferenceDivergence(prefs) / max;
}

std::string ScenarioToJson(const Scenario& s) {
  json radio = {
      {"bandwidth_per_user_hz", s.radio().bandwidth_per_user_hz},
      {"noise_power_w", s.radio().noise_power_w},
      {"amplifier_factor", s.radio().amplifier_factor},
      {"pathloss_ref_db", s.radio().pathloss_ref_db},
      {"pathloss_exp_coeff", s.radio().pathloss_exp_coeff},
      {"shadowing_std_db", s.radio().shadowing_std_db},
  };
  json sbss = json::array();
  for (const SbsSpec& b : s.sbss()) {
    sbss.push_back({{"position_m", PositionJson(b.position)},
                    {"max_tx_power_w", b.max_tx_power_w},
                    {"cache_capacity_bits", b.cache_capacity_bits},
                    {"backhaul_capacity_bps", b.backhaul_capacity_bps},
                    {"circuit_power_w", b.circuit_power_w},
                    {"cache_coeff_w_per_bit", b.cache_coeff_w_per_bit},
                    {"backhaul_coeff_w_per_bps", b.backhaul_coeff_w_per_bps},
                    {"backhaul_delay_s", b.backhaul_delay_s}});
  }
  json users = json::array();
  for (const UserSpec& u : s.users()) {
    users.push_back({{"position_m", PositionJson(u.position)}, {"preferences", u.preferences}});
  }
  json files = json::array();
  for (const FileSpec& f : s.files()) {
    files.push_back({{"size_bits", f.size_bits}, {"rate_requirement_bps", f.rate_requirement_bps}});
  }
  json gains = json::array();
  for (int i = 0; i < s.num_users(); ++i) {
    json row = json::array();
    for (int j = 0; j < s.num_sbs(); ++j) row.push_back(s.gain(i, j));
    gains.push_back(row);
  }
  json doc = {{"radio", radio}, {"sbss", sbss}, {"users", users},
              {"files", files}, {"gains", gains}, {"rng_seed", s.rng_seed()}};
  return doc.dump(2);
}

Scenario ScenarioFromJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
    RadioConfig radio;
    const json& r = doc.at("radio");
    radio.bandwidth_per_user_hz = r.at("bandwidth_per_user_hz").get<double>();
    radio.noise_power_w = r.at("noise_power_w").get<double>();
    radio.amplifier_factor = r.at("amplifier_factor").get<double>();
    radio.pathloss_ref_db = r.at("pathloss_ref_db").get<double>();
    radio.pathloss_exp_coeff = r.at("pathloss_exp_coeff").get<double>();
    radio.shadowing_std_db = r.at("shadowing_std_db").get<double>();
    std::vector<SbsSpec> sbss;
    for (const json& b : doc.at("sbss")) {
      SbsSpec s;
      s.position = PositionFrom(b.at("position_m"));
      s.max_tx_power_w = b.at("max_tx_power_w").get<double>();
      s.cache_capacity_bits = b.at("cache_capacity_bits").get<double>();
      s.backhaul_capacity_bps = b.at("backhaul_capacity_bps").get<double>();
      s.circuit_power_w = b.at("circuit_power_w").get<double>();
      s.cache_coeff_w_per_bit = b.at("cache_coeff_w_per_bit").get<double>();
      s.backhaul_coeff_w_per_bps = b.at("backhaul_coeff_w_per_bps").get<double>();
      s.backhaul_delay_s = b.at("backhaul_delay_s").get<double>();
      sbss.push_back(s);
    }
    std::vector<UserSpec> users;
    for (const json& u : doc.at("users")) {
      users.push_back({PositionFrom(u.at("position_m")),
                       u.at("preferences").get<std::vector<double>>()});
    }
    std::vector<FileSpec> files;
    for (const json& f : doc.at("files")) {
      files.push_back({f.at("size_bits").get<double>(), f.at("rate_requirement_bps").get<double>()});
    }
    const json& g = doc.at("gains");
    Matrix gains(users.size(), sbss.size());
    Require(g.size() == users.size(), "gains must have one row per user");
    for (std::size_t i = 0; i < users.size(); ++i) {
      Require(g[i].size() == sbss.size(), "gains row must have one entry per SBS");
      for (std::size_t j = 0; j < sbss.size(); ++j) gains(i, j) = g[i][j].get<double>();
    }
    return Scenario(radio, std::move(sbss), std::move(users), std::move(files),
                    std::move(gains), doc.at("rng_seed").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed scenario document: ") + e.what());
  }
}

}  // namespace jdpo
