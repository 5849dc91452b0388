#include "jdpo/exact_model.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace jdpo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// w * value with the convention 0 * inf = 0, so that a zero weight removes a
// term entirely.
double Weighted(double w, double value) { return w == 0.0 ? 0.0 : w * value; }

double RateForProfile(const Scenario& s, const Matrix& p, int i, int j) {
  return s.radio().bandwidth_per_user_hz * std::log2(1.0 + SinrForProfile(s, p, i, j));
}

void CheckShapes(const Scenario& s, const Assignment& a) {
  const int U = s.num_users(), B = s.num_sbs(), F = s.num_files();
  if (a.association.rows() != U || a.association.cols() != B ||
      a.placement.rows() != B || a.placement.cols() != F ||
      a.tx_power_w.rows() != U || a.tx_power_w.cols() != B) {
    throw std::invalid_argument("assignment dimensions do not match the scenario");
  }
}

}  // namespace

Assignment Assignment::Empty(const Scenario& s) {
  Assignment a;
  a.association = BinaryMatrix::Zero(s.num_users(), s.num_sbs());
  a.placement = BinaryMatrix::Zero(s.num_sbs(), s.num_files());
  a.tx_power_w = Matrix::Zero(s.num_users(), s.num_sbs());
  return a;
}

int Assignment::ServingSbs(int i) const {
  int serving = -1;
  for (int j = 0; j < association.cols(); ++j) {
    if (association(i, j) == 0) continue;
    if (association(i, j) != 1 || serving >= 0) return -1;
    serving = j;
  }
  return serving;
}

void ObjectiveWeights::Validate() const {
  if (!(theta >= 0 && theta <= 1)) throw std::invalid_argument("theta must lie in [0, 1]");
  if (!(delta_p > 0) || !(delta_d > 0)) {
    throw std::invalid_argument("delta_p and delta_d must be positive");
  }
}

double ModelReport::total_power_w() const {
  double sum = 0;
  for (const auto& p : per_sbs_power_w) sum += p.total;
  return sum;
}

double ModelReport::average_delay_s() const {
  if (per_user_delay_s.empty()) return 0;
  double sum = 0;
  for (const auto& d : per_user_delay_s) sum += d.total;
  return sum / per_user_delay_s.size();
}

double Interference(const Scenario& s, const Matrix& p, int i, int j) {
  double sum = 0;
  for (int m = 0; m < s.num_users(); ++m) {
    if (m == i) continue;
    for (int l = 0; l < s.num_sbs(); ++l) {
      if (l == j) continue;
      sum += p(m, l) * s.gain(i, l);
    }
  }
  return sum + s.radio().noise_power_w;
}

double SinrForProfile(const Scenario& s, const Matrix& p, int i, int j) {
  return p(i, j) * s.gain(i, j) / Interference(s, p, i, j);
}

double Sinr(const Scenario& s, const Assignment& a, int i, int j) {
  CheckShapes(s, a);
  if (a.association(i, j) != 1) {
    throw std::domain_error("SINR requested for a pair that is not associated");
  }
  return SinrForProfile(s, a.tx_power_w, i, j);
}

double Rate(const Scenario& s, const Assignment& a, int i, int j) {
  return s.radio().bandwidth_per_user_hz * std::log2(1.0 + Sinr(s, a, i, j));
}

SbsPowerBreakdown SbsPowerDetail(const Scenario& s, const Assignment& a, int j) {
  CheckShapes(s, a);
  const SbsSpec& sbs = s.sbs(j);
  SbsPowerBreakdown out;
  out.transmit = a.tx_power_w.col(j).sum();
  double cached_bits = 0;
  for (int k = 0; k < s.num_files(); ++k) {
    if (a.placement(j, k)) cached_bits += s.file(k).size_bits;
  }
  out.caching = sbs.cache_coeff_w_per_bit * cached_bits;
  out.circuit = sbs.circuit_power_w;
  double backhaul_rate = 0;
  for (int i = 0; i < s.num_users(); ++i) {
    if (!a.association(i, j)) continue;
    for (int k = 0; k < s.num_files(); ++k) {
      if (!a.placement(j, k)) {
        backhaul_rate += s.preference(i, k) * s.file(k).rate_requirement_bps;
      }
    }
  }
  out.backhaul = sbs.backhaul_coeff_w_per_bps * backhaul_rate;
  out.total = s.radio().amplifier_factor * out.transmit + out.caching + out.circuit + out.backhaul;
  return out;
}

double SbsPower(const Scenario& s, const Assignment& a, int j) {
  return SbsPowerDetail(s, a, j).total;
}

UserDelayBreakdown UserDelayDetail(const Scenario& s, const Assignment& a, int i) {
  CheckShapes(s, a);
  UserDelayBreakdown out;
  for (int j = 0; j < s.num_sbs(); ++j) {
    if (!a.association(i, j)) continue;
    const double r = RateForProfile(s, a.tx_power_w, i, j);
    for (int k = 0; k < s.num_files(); ++k) {
      const double q = s.preference(i, k);
      if (q == 0) continue;
      out.wireless += r > 0 ? q * s.file(k).size_bits / r : kInf;
      if (!a.placement(j, k)) out.backhaul += q * s.sbs(j).backhaul_delay_s;
    }
  }
  out.total = out.wireless + out.backhaul;
  return out;
}

double UserDelay(const Scenario& s, const Assignment& a, int i) {
  return UserDelayDetail(s, a, i).total;
}

SplitObjective Split(const Scenario& s, const Assignment& a, const ObjectiveWeights& w) {
  SplitObjective out;
  const double pw = w.power_weight(), dw = w.delay_weight();
  double rest_power = 0;
  double transmit = 0;
  for (int j = 0; j < s.num_sbs(); ++j) {
    const SbsPowerBreakdown p = SbsPowerDetail(s, a, j);
    transmit += p.transmit;
    rest_power += p.caching + p.circuit + p.backhaul;
  }
  double wireless = 0, backhaul = 0;
  for (int i = 0; i < s.num_users(); ++i) {
    const UserDelayBreakdown d = UserDelayDetail(s, a, i);
    wireless += d.wireless;
    backhaul += d.backhaul;
  }
  out.f1 = pw * s.radio().amplifier_factor * transmit + Weighted(dw, wireless);
  out.f2 = pw * rest_power + dw * backhaul;
  return out;
}

double Objective(const Scenario& s, const Assignment& a, const ObjectiveWeights& w) {
  double power = 0, delay = 0;
  for (int j = 0; j < s.num_sbs(); ++j) power += SbsPower(s, a, j);
  for (int i = 0; i < s.num_users(); ++i) delay += UserDelay(s, a, i);
  return w.power_weight() * power + Weighted(w.delay_weight(), delay);
}

double F2(const Scenario& s, const BinaryMatrix& x, const BinaryMatrix& y,
          const ObjectiveWeights& w) {
  Assignment a = Assignment::Empty(s);
  a.association = x;
  a.placement = y;
  double rest_power = 0;
  for (int j = 0; j < s.num_sbs(); ++j) {
    const SbsPowerBreakdown p = SbsPowerDetail(s, a, j);
    rest_power += p.caching + p.circuit + p.backhaul;
  }
  double backhaul = 0;
  for (int i = 0; i < s.num_users(); ++i) {
    for (int j = 0; j < s.num_sbs(); ++j) {
      if (!x(i, j)) continue;
      for (int k = 0; k < s.num_files(); ++k) {
        if (!y(j, k)) backhaul += s.preference(i, k) * s.sbs(j).backhaul_delay_s;
      }
    }
  }
  return w.power_weight() * rest_power + w.delay_weight() * backhaul;
}

std::vector<ConstraintMargin> ConstraintMargins(const Scenario& s, const Assignment& a) {
  CheckShapes(s, a);
  const int U = s.num_users(), B = s.num_sbs(), F = s.num_files();
  std::vector<ConstraintMargin> out;
  for (int j = 0; j < B; ++j) {
    out.push_back({"tx_power", j, s.sbs(j).max_tx_power_w - a.tx_power_w.col(j).sum()});
  }
  for (int i = 0; i < U; ++i) {
    double rate = 0;
    for (int j = 0; j < B; ++j) {
      if (a.association(i, j)) rate += RateForProfile(s, a.tx_power_w, i, j);
    }
    out.push_back({"rate", i, rate - s.rate_requirement(i)});
  }
  for (int i = 0; i < U; ++i) {
    double margin = 0;
    int row_sum = 0;
    for (int j = 0; j < B; ++j) {
      const int v = a.association(i, j);
      if (v != 0 && v != 1) margin = -1;
      row_sum += v;
    }
    out.push_back({"association_binary", i, margin});
    out.push_back({"single_sbs", i, -std::abs(row_sum - 1.0)});
  }
  for (int j = 0; j < B; ++j) {
    double margin = 0;
    double load = 0;
    for (int k = 0; k < F; ++k) {
      const int v = a.placement(j, k);
      if (v != 0 && v != 1) margin = -1;
      load += v * s.file(k).size_bits;
    }
    out.push_back({"placement_binary", j, margin});
    out.push_back({"cache", j, s.sbs(j).cache_capacity_bits - load});
  }
  for (int j = 0; j < B; ++j) {
    double backhaul_rate = 0;
    for (int i = 0; i < U; ++i) {
      if (!a.association(i, j)) continue;
      for (int k = 0; k < F; ++k) {
        if (!a.placement(j, k)) backhaul_rate += s.preference(i, k) * s.file(k).rate_requirement_bps;
      }
    }
    out.push_back({"backhaul", j, s.sbs(j).backhaul_capacity_bps - backhaul_rate});
  }
  return out;
}

std::vector<ConstraintMargin> CheckFeasibility(const Scenario& s, const Assignment& a) {
  std::vector<ConstraintMargin> out;
  for (const ConstraintMargin& c : ConstraintMargins(s, a)) {
    if (c.margin < -kFeasibilityTol) out.push_back(c);
  }
  return out;
}

ModelReport Evaluate(const Scenario& s, const Assignment& a, const ObjectiveWeights& w) {
  ModelReport r;
  for (int j = 0; j < s.num_sbs(); ++j) r.per_sbs_power_w.push_back(SbsPowerDetail(s, a, j));
  for (int i = 0; i < s.num_users(); ++i) r.per_user_delay_s.push_back(UserDelayDetail(s, a, i));
  r.objective_value = Objective(s, a, w);
  r.constraint_violations = CheckFeasibility(s, a);
  return r;
}

void WriteReportCsv(std::ostream& out, const ModelReport& report) {
  out << "kind,index,c1,c2,c3,c4,c5\n";
  for (std::size_t j = 0; j < report.per_sbs_power_w.size(); ++j) {
    const auto& p = report.per_sbs_power_w[j];
    out << "sbs," << j << ',' << p.transmit << ',' << p.caching << ',' << p.circuit << ','
        << p.backhaul << ',' << p.total << '\n';
  }
  for (std::size_t i = 0; i < report.per_user_delay_s.size(); ++i) {
    const auto& d = report.per_user_delay_s[i];
    out << "user," << i << ',' << d.wireless << ',' << d.backhaul << ',' << d.total << ",,\n";
  }
}

}  // namespace jdpo
