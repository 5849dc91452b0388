#pragma once

#include <iosfwd>

#include "jdpo/common.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

// Constants of the lower bound log2(1 + g) >= alpha log2(g) + beta, tight at
// g = anchor_sinr.
struct ApproxParams {
  Matrix alpha;
  Matrix beta;
  Matrix anchor_sinr;
};

// Natural-log transmit powers, U x B. Switched-off pairs sit at
// log(kPowerFloorW).
struct LogPower {
  Matrix values;

  Matrix ToWatts() const { return values.array().exp().matrix(); }
  static LogPower FromWatts(const Matrix& watts);
};

struct AnchorConstants {
  double alpha = 0;
  double beta = 0;
};

// Throws std::invalid_argument when gamma0 <= 0.
AnchorConstants FitAnchor(double gamma0);

// P_j / U on every pair.
Matrix DefaultAnchorPowers(const Scenario& scenario);

// Fits every (i, j) pair at the SINR the anchor profile induces.
ApproxParams FitParams(const Scenario& scenario, const Matrix& anchor_powers_w);

// Refits the pairs that carry more than the floor power in `current_powers_w`.
// Other pairs keep their constants.
ApproxParams RefitIteration(const Scenario& scenario, const ApproxParams& params,
                            const Matrix& current_powers_w);

double ApproxRate(const Scenario& scenario, const ApproxParams& params,
                  const LogPower& log_powers, int i, int j);

// Index of pair (i, j) in the flattened U*B log-power vector.
inline int PairIndex(int i, int j, int num_sbs) { return i * num_sbs + j; }

struct RateDerivatives {
  double rate = 0;
  // d rate / d logp over the flattened U*B coordinates.
  Vector grad;
  // Filled only on request.
  Matrix hess;
};

RateDerivatives ApproxRateDerivatives(const Scenario& scenario, const ApproxParams& params,
                                      const Matrix& log_powers, int i, int j,
                                      bool with_hessian);

// Largest surrogate rate pair (i, j) can reach: own power at P_j, every
// other pair at the floor.
double MaxApproxRate(const Scenario& scenario, const ApproxParams& params, int i, int j);

struct SurrogateValue {
  double f1 = 0;
  double f2 = 0;
  double total = 0;
  // False when some associated pair has a nonpositive surrogate rate. f1 and
  // total are +inf in that case.
  bool in_domain = true;
  // d f1 / d logp, U x B.
  Matrix gradient_f1;
};

SurrogateValue SurrogateObjective(const Scenario& scenario, const ApproxParams& params,
                                  const BinaryMatrix& x, const BinaryMatrix& y,
                                  const LogPower& log_powers, const ObjectiveWeights& w);

// Columns i,j,alpha,beta,gamma0.
void WriteParamsCsv(std::ostream& out, const ApproxParams& params);

}  // namespace jdpo
