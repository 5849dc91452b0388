#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "jdpo/common.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

// Decision triple: association x (U x B), placement y (B x F), transmit
// powers p (U x B, watts).
struct Assignment {
  BinaryMatrix association;
  BinaryMatrix placement;
  Matrix tx_power_w;

  static Assignment Empty(const Scenario& scenario);
  // Index of the single SBS serving user i, or -1 if the row is not one-hot.
  int ServingSbs(int i) const;
};

struct ObjectiveWeights {
  double theta = 0.5;
  double delta_p = 0.002;
  double delta_d = 0.2;

  double power_weight() const { return theta * delta_p; }
  double delay_weight() const { return (1.0 - theta) * delta_d; }
  void Validate() const;
};

struct ConstraintMargin {
  // One of "tx_power" ... "backhaul".
  std::string id;
  // User index for rate and association rows, SBS index otherwise.
  int index = 0;
  double margin = 0.0;
};

struct SbsPowerBreakdown {
  double transmit = 0;  // sum_i p_ij, before the amplifier factor
  double caching = 0;
  double circuit = 0;
  double backhaul = 0;
  double total = 0;
};

struct UserDelayBreakdown {
  double wireless = 0;
  double backhaul = 0;
  double total = 0;
};

struct ModelReport {
  std::vector<SbsPowerBreakdown> per_sbs_power_w;
  std::vector<UserDelayBreakdown> per_user_delay_s;
  double objective_value = 0;
  std::vector<ConstraintMargin> constraint_violations;

  double total_power_w() const;
  double average_delay_s() const;
};

struct SplitObjective {
  double f1 = 0;
  double f2 = 0;
};

// Sum over m != i, l != j of p_ml g_il plus noise. Works for any power
// profile, regardless of association.
double Interference(const Scenario& scenario, const Matrix& powers_w, int i, int j);
double SinrForProfile(const Scenario& scenario, const Matrix& powers_w, int i, int j);

// Throws std::domain_error unless x_ij = 1.
double Sinr(const Scenario& scenario, const Assignment& a, int i, int j);
double Rate(const Scenario& scenario, const Assignment& a, int i, int j);

double SbsPower(const Scenario& scenario, const Assignment& a, int j);
SbsPowerBreakdown SbsPowerDetail(const Scenario& scenario, const Assignment& a, int j);

// Infinite when a requested file would be delivered at rate zero.
double UserDelay(const Scenario& scenario, const Assignment& a, int i);
UserDelayBreakdown UserDelayDetail(const Scenario& scenario, const Assignment& a, int i);

double Objective(const Scenario& scenario, const Assignment& a, const ObjectiveWeights& w);
SplitObjective Split(const Scenario& scenario, const Assignment& a, const ObjectiveWeights& w);

// Caching, circuit and backhaul power plus backhaul delay for a binary pair
// (x, y). Independent of transmit powers.
double F2(const Scenario& scenario, const BinaryMatrix& x, const BinaryMatrix& y,
          const ObjectiveWeights& w);

// Signed margins for every constraint of the joint problem.
std::vector<ConstraintMargin> ConstraintMargins(const Scenario& scenario, const Assignment& a);
// Only the margins below -kFeasibilityTol.
std::vector<ConstraintMargin> CheckFeasibility(const Scenario& scenario, const Assignment& a);

ModelReport Evaluate(const Scenario& scenario, const Assignment& a, const ObjectiveWeights& w);

// Rows "sbs,<j>,transmit,caching,circuit,backhaul,total" and
// "user,<i>,wireless,backhaul,total".
void WriteReportCsv(std::ostream& out, const ModelReport& report);

}  // namespace jdpo
