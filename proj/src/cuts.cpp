#include "jdpo/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace jdpo {
namespace {

const double kLogFloor = std::log(kPowerFloorW);
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// The per-user part of the Lagrangian: h(r) = dw S / r + lambda (R - r).
struct UserTerm {
  double dw = 0;
  double S = 0;
  double lambda = 0;
  double R = 0;

  double h(double r) const { return dw * S / r + lambda * (R - r); }
  double dh(double r) const { return -dw * S / (r * r) - lambda; }
  double d2h(double r) const { return 2.0 * dw * S / (r * r * r); }
};

struct Box {
  Vector lo;
  Vector hi;
};

// Every power-allocation solution with the rate requirements met lies in
// the box: associated pairs need at least the noise-limited power, the rest
// sit at the floor.
Box MakeBox(const Scenario& s, const ApproxParams& params, double headroom_w) {
  const int U = s.num_users(), B = s.num_sbs();
  Box box{Vector(U * B), Vector(U * B)};
  const double W = s.radio().bandwidth_per_user_hz;
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      const double log2_target = (s.rate_requirement(i) / W - params.beta(i, j)) / params.alpha(i, j);
      const double log_min = log2_target * kLn2 + std::log(s.radio().noise_power_w / s.gain(i, j));
      box.lo(PairIndex(i, j, B)) = std::min(kLogFloor, log_min);
      box.hi(PairIndex(i, j, B)) = std::log(s.sbs(j).max_tx_power_w + headroom_w);
    }
  }
  return box;
}

// min over [lo, hi] of kappa e^t - pi t.
double MinExpLinear(double kappa, double pi, double lo, double hi) {
  double t;
  if (kappa <= 0) {
    t = pi > 0 ? hi : lo;
  } else {
    t = pi > 0 ? std::clamp(std::log(pi / kappa), lo, hi) : lo;
  }
  return kappa * std::exp(t) - pi * t;
}

// Lower bound on min h(r_ij(t)) + pi . t over the box intersected with
// r_ij >= R. NaN when that set is empty.
double MinimizeUserTerm(const Scenario& s, const ApproxParams& params, int i, int j,
                        const UserTerm& term, const Vector& pi, const Box& box) {
  const int U = s.num_users(), B = s.num_sbs();
  std::vector<int> support{PairIndex(i, j, B)};
  std::vector<bool> in_support(U * B, false);
  in_support[support[0]] = true;
  for (int m = 0; m < U; ++m) {
    if (m == i) continue;
    for (int l = 0; l < B; ++l) {
      if (l == j) continue;
      support.push_back(PairIndex(m, l, B));
      in_support[PairIndex(m, l, B)] = true;
    }
  }
  double linear = 0;
  for (int c = 0; c < U * B; ++c) {
    if (in_support[c] || pi(c) == 0) continue;
    linear += pi(c) > 0 ? pi(c) * box.lo(c) : pi(c) * box.hi(c);
  }

  const int n = static_cast<int>(support.size());
  const Vector lo = box.lo(support), hi = box.hi(support), pis = pi(support);
  Vector full = box.lo;
  auto to_matrix = [&](const Vector& v) {
    for (int a = 0; a < n; ++a) full(support[a]) = v(a);
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
               full.data(), U, B)
        .eval();
  };
  auto rate_of = [&](const Vector& v, bool second, Vector* g, Matrix* H) {
    const RateDerivatives rd = ApproxRateDerivatives(s, params, to_matrix(v), i, j, second);
    if (g) *g = rd.grad(support);
    if (H && second) *H = rd.hess(support, support);
    return rd.rate;
  };

  Vector v(n);
  bool found = false;
  for (double frac = 1e-2; frac >= 1e-12; frac *= 0.1) {
    for (int a = 0; a < n; ++a) {
      const double d = frac * (hi(a) - lo(a));
      v(a) = a == 0 ? hi(a) - d : lo(a) + d;
    }
    if (rate_of(v, false, nullptr, nullptr) > term.R) {
      found = true;
      break;
    }
  }
  if (!found) return kNaN;

  const int m_c = 2 * n + 1;
  auto psi = [&](const Vector& x) { return term.h(rate_of(x, false, nullptr, nullptr)) + pis.dot(x); };
  auto barrier_value = [&](const Vector& x, double tau, double* out) {
    const double r = rate_of(x, false, nullptr, nullptr);
    if (!(r > term.R)) return false;
    if (((x - lo).array() <= 0).any() || ((hi - x).array() <= 0).any()) return false;
    *out = term.h(r) + pis.dot(x) -
           tau * ((x - lo).array().log().sum() + (hi - x).array().log().sum() + std::log(r / term.R - 1.0));
    return true;
  };

  double tau = (1.0 + std::abs(psi(v))) / m_c;
  for (int outer = 0; outer < 40; ++outer) {
    for (int it = 0; it < 100; ++it) {
      Vector gr;
      Matrix Hr;
      const double r = rate_of(v, true, &gr, &Hr);
      const double u = r / term.R - 1.0;
      Vector grad = term.dh(r) * gr + pis;
      Matrix hess = term.d2h(r) * gr * gr.transpose() + term.dh(r) * Hr;
      const Vector a1 = (v - lo).array().inverse();
      const Vector a2 = (hi - v).array().inverse();
      grad += -tau * (a1 - a2);
      hess.diagonal() += tau * (a1.array().square() + a2.array().square()).matrix();
      grad += -tau * gr / (term.R * u);
      hess += -tau * (Hr / (term.R * u) - gr * gr.transpose() / (term.R * term.R * u * u));
      Eigen::LDLT<Matrix> ldlt(hess);
      const Vector step = -ldlt.solve(grad);
      const double decrement = -grad.dot(step);
      double phi0 = 0;
      barrier_value(v, tau, &phi0);
      if (!step.allFinite() || decrement / 2 <= 1e-14 * (1.0 + std::abs(phi0))) break;
      double t = 1.0, phi1 = 0;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
        const Vector trial = v + t * step;
        if (barrier_value(trial, tau, &phi1) && phi1 <= phi0 - 0.25 * t * decrement) {
          v = trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (m_c * tau <= 1e-11 * (1.0 + std::abs(psi(v)))) break;
    tau *= 0.1;
  }
  const double value = psi(v);
  return value + linear - m_c * tau - 1e-11 * (1.0 + std::abs(value));
}

struct Decomposition {
  Matrix kappa;           // coefficient of exp(logp) per pair
  UserTerm base;          // dw shared by every user
  Vector lambda;          // rate multipliers per user
  Matrix logp_star;
  BinaryMatrix x_used;
  double headroom_w = 0;  // extra room above P_j in the box
};

struct DecompositionResult {
  double a0 = 0;
  Matrix c;
};

DecompositionResult Decompose(const Scenario& s, const ApproxParams& params, const Decomposition& d) {
  const int U = s.num_users(), B = s.num_sbs();
  const Box box = MakeBox(s, params, d.headroom_w);
  // pi_i = -grad of user i's term at the solution.
  std::vector<Vector> pi(U);
  std::vector<int> serving(U, -1);
  Vector total_pi = Vector::Zero(U * B);
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      if (d.x_used(i, j)) serving[i] = j;
    }
    UserTerm term = d.base;
    term.S = s.mean_file_size(i);
    term.lambda = d.lambda(i);
    term.R = s.rate_requirement(i);
    const RateDerivatives rd = ApproxRateDerivatives(s, params, d.logp_star, i, serving[i], false);
    pi[i] = -term.dh(rd.rate) * rd.grad;
    total_pi += pi[i];
  }
  DecompositionResult out;
  for (int a = 0; a < U; ++a) {
    for (int b = 0; b < B; ++b) {
      const int c = PairIndex(a, b, B);
      out.a0 += MinExpLinear(d.kappa(a, b), total_pi(c), box.lo(c), box.hi(c));
    }
  }
  out.c = Matrix::Zero(U, B);
  Vector star(U * B);
  for (int a = 0; a < U; ++a) {
    for (int b = 0; b < B; ++b) star(PairIndex(a, b, B)) = d.logp_star(a, b);
  }
  const bool star_in_box = ((star - box.lo).array() >= 0).all() && ((box.hi - star).array() >= 0).all();
  for (int i = 0; i < U; ++i) {
    UserTerm term = d.base;
    term.S = s.mean_file_size(i);
    term.lambda = d.lambda(i);
    term.R = s.rate_requirement(i);
    for (int j = 0; j < B; ++j) {
      double value;
      if (j == serving[i] && star_in_box) {
        // The solution is a stationary point of this convex term.
        const double r = ApproxRateDerivatives(s, params, d.logp_star, i, j, false).rate;
        value = term.h(r) + pi[i].dot(star);
      } else {
        value = MinimizeUserTerm(s, params, i, j, term, pi[i], box);
      }
      // Pairs that cannot meet the requirement never appear in a feasible
      // association, so any coefficient keeps the cut valid.
      out.c(i, j) = std::isnan(value) ? 0.0 : value;
    }
  }
  return out;
}

}  // namespace

const char* CutKindName(CutKind kind) {
  switch (kind) {
    case CutKind::kOptimality:
      return "optimality";
    case CutKind::kFeasibility:
      return "feasibility";
    case CutKind::kNoGood:
      return "no_good";
  }
  return "unknown";
}

double Cut::Evaluate(const BinaryMatrix& x) const {
  return const_term + (x_coeffs.array() * x.cast<double>().array()).sum();
}

BinaryMatrix AdmissiblePairs(const Scenario& s, const ApproxParams& params) {
  BinaryMatrix mask(s.num_users(), s.num_sbs());
  for (int i = 0; i < s.num_users(); ++i) {
    for (int j = 0; j < s.num_sbs(); ++j) {
      mask(i, j) = MaxApproxRate(s, params, i, j) > s.rate_requirement(i) ? 1 : 0;
    }
  }
  return mask;
}

Cut MakeOptimalityCut(const Scenario& s, const ApproxParams& params, const ObjectiveWeights& w,
                      const PrimalSolution& primal) {
  if (primal.kkt_residual > 1e-6) throw std::invalid_argument("primal solution is not certified");
  const int U = s.num_users(), B = s.num_sbs();
  Decomposition d;
  d.kappa = Matrix(U, B);
  double constant = 0;
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      d.kappa(i, j) = w.power_weight() * s.radio().amplifier_factor + primal.duals_mu(i, j) +
                      primal.duals_budget(j);
      constant -= primal.duals_mu(i, j) * kPowerFloorW;
    }
  }
  for (int j = 0; j < B; ++j) constant -= primal.duals_budget(j) * s.sbs(j).max_tx_power_w;
  d.base.dw = w.delay_weight();
  d.lambda = primal.duals_rate;
  d.logp_star = primal.log_powers.values;
  d.x_used = primal.x;
  const DecompositionResult r = Decompose(s, params, d);

  Cut cut;
  cut.kind = CutKind::kOptimality;
  cut.const_term = r.a0 + constant;
  cut.x_coeffs = r.c;
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      cut.x_coeffs(i, j) -= primal.duals_mu(i, j) * (s.sbs(j).max_tx_power_w - kPowerFloorW);
    }
  }
  cut.source = primal.duals_mu;
  return cut;
}

Cut MakeFeasibilityCut(const Scenario& s, const ApproxParams& params,
                       const FeasibilityCertificate& cert) {
  if (cert.status != FeasibilityStatus::kViolated || !(cert.eta > 0)) {
    throw std::invalid_argument("feasibility cut needs a certificate with positive violation");
  }
  const int U = s.num_users(), B = s.num_sbs();
  Decomposition d;
  d.kappa = Matrix(U, B);
  double constant = 0;
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      d.kappa(i, j) = cert.duals_nu(i, j) + cert.duals_nu_budget(j);
      constant -= cert.duals_nu(i, j) * kPowerFloorW;
    }
  }
  for (int j = 0; j < B; ++j) constant -= cert.duals_nu_budget(j) * s.sbs(j).max_tx_power_w;
  d.base.dw = 0;
  d.lambda = cert.duals_rate;
  d.logp_star = cert.log_powers.values;
  d.x_used = cert.x;
  // The violation solution exceeds the caps by eta. Widening the box by eta
  // keeps the cut exact there and still contains every feasible allocation.
  d.headroom_w = cert.eta;
  const DecompositionResult r = Decompose(s, params, d);

  Cut cut;
  cut.kind = CutKind::kFeasibility;
  cut.const_term = r.a0 + constant;
  cut.x_coeffs = r.c;
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      cut.x_coeffs(i, j) -= cert.duals_nu(i, j) * (s.sbs(j).max_tx_power_w - kPowerFloorW);
    }
  }
  cut.source = cert.duals_nu;
  return cut;
}

Cut MakeNoGoodCut(const BinaryMatrix& x_used) {
  Cut cut;
  cut.kind = CutKind::kNoGood;
  cut.x_coeffs = x_used.cast<double>();
  cut.const_term = -(x_used.sum() - 1.0);
  cut.source = Matrix::Zero(x_used.rows(), x_used.cols());
  return cut;
}

void WriteCutsCsv(std::ostream& out, const std::vector<Cut>& cuts) {
  out.precision(17);
  for (const Cut& cut : cuts) {
    out << CutKindName(cut.kind) << ',' << cut.iteration << ',' << cut.const_term;
    for (int i = 0; i < cut.x_coeffs.rows(); ++i) {
      for (int j = 0; j < cut.x_coeffs.cols(); ++j) out << ',' << cut.x_coeffs(i, j);
    }
    out << '\n';
  }
}

}  // namespace jdpo
