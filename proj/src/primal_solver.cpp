#include "jdpo/primal_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace jdpo {
namespace {

const double kLogFloor = std::log(kPowerFloorW);
constexpr double kMaxViolationRatio = 1e6;

struct Layout {
  int U = 0;
  int B = 0;
  std::vector<int> serving;
  std::vector<int> coord;  // flattened pair index of each user's serving pair
  std::vector<std::vector<int>> users_of;
  std::vector<int> busy_sbs;  // SBSs with at least one user
};

Layout MakeLayout(const Scenario& s, const BinaryMatrix& x) {
  if (x.rows() != s.num_users() || x.cols() != s.num_sbs()) {
    throw std::invalid_argument("association must be users x SBSs");
  }
  Layout L;
  L.U = s.num_users();
  L.B = s.num_sbs();
  L.users_of.resize(L.B);
  for (int i = 0; i < L.U; ++i) {
    int serving = -1;
    for (int j = 0; j < L.B; ++j) {
      if (x(i, j) == 0) continue;
      if (x(i, j) != 1 || serving >= 0) {
        throw std::invalid_argument("association row must have exactly one 1");
      }
      serving = j;
    }
    if (serving < 0) throw std::invalid_argument("association row must have exactly one 1");
    L.serving.push_back(serving);
    L.coord.push_back(PairIndex(i, serving, L.B));
    L.users_of[serving].push_back(i);
  }
  for (int j = 0; j < L.B; ++j) {
    if (!L.users_of[j].empty()) L.busy_sbs.push_back(j);
  }
  return L;
}

Matrix FullLogPowers(const Layout& L, const Vector& t) {
  Matrix logp = Matrix::Constant(L.U, L.B, kLogFloor);
  for (int i = 0; i < L.U; ++i) logp(i, L.serving[i]) = t(i);
  return logp;
}

double BudgetFloor(const Layout& L, int j) {
  return kPowerFloorW * (L.U - static_cast<int>(L.users_of[j].size()));
}

// Gradient and Hessian of a user's serving rate restricted to the active
// coordinates.
struct ActiveRate {
  double rate;
  Vector grad;
  Matrix hess;
};

ActiveRate RestrictedRate(const Scenario& s, const ApproxParams& params, const Layout& L,
                          const Matrix& logp, int i, bool second_order) {
  const RateDerivatives rd = ApproxRateDerivatives(s, params, logp, i, L.serving[i], second_order);
  ActiveRate out{rd.rate, rd.grad(L.coord), Matrix()};
  if (second_order) out.hess = rd.hess(L.coord, L.coord);
  return out;
}

// Scaled power allocation problem over the active log-powers.
class PowerProgram : public ConvexProgram {
 public:
  PowerProgram(const Scenario& s, const ApproxParams& params, const Layout& L,
               const ObjectiveWeights& w)
      : s_(s), params_(params), L_(L), w_(w) {}

  void set_scale(double scale) { scale_ = scale; }
  double scale() const { return scale_; }

  int num_variables() const override { return L_.U; }
  int num_constraints() const override {
    return 2 * L_.U + static_cast<int>(L_.busy_sbs.size());
  }

  // Unscaled surrogate F1.
  bool Objective(const Vector& t, double* f1) const {
    const Matrix logp = FullLogPowers(L_, t);
    double f = w_.power_weight() * s_.radio().amplifier_factor * logp.array().exp().sum();
    for (int i = 0; i < L_.U; ++i) {
      const double r = ApproxRateDerivatives(s_, params_, logp, i, L_.serving[i], false).rate;
      if (!(r > 0)) return false;
      if (w_.delay_weight() > 0) f += w_.delay_weight() * s_.mean_file_size(i) / r;
    }
    *f1 = f;
    return true;
  }

  bool Evaluate(const Vector& t, bool second_order, ProgramEval* out) const override {
    const int U = L_.U, m = num_constraints();
    const Matrix logp = FullLogPowers(L_, t);
    const Vector e = t.array().exp();
    const double pw = w_.power_weight() * s_.radio().amplifier_factor;
    const double dw = w_.delay_weight();
    out->f = pw * logp.array().exp().sum();
    out->grad = pw * e;
    out->hess = Matrix(pw * e.asDiagonal());
    out->g.resize(m);
    out->jac = Matrix::Zero(m, U);
    out->g_hess.assign(second_order ? m : 0, Matrix::Zero(U, U));
    int c = 0;
    for (int i = 0; i < U; ++i, ++c) {
      const double P = s_.sbs(L_.serving[i]).max_tx_power_w;
      out->g(c) = e(i) / P - 1.0;
      out->jac(c, i) = e(i) / P;
      if (second_order) out->g_hess[c](i, i) = e(i) / P;
    }
    for (int j : L_.busy_sbs) {
      const double P = s_.sbs(j).max_tx_power_w;
      double sum = BudgetFloor(L_, j) / scale_;
      for (int i : L_.users_of[j]) {
        sum += e(i);
        out->jac(c, i) = e(i) / P;
        if (second_order) out->g_hess[c](i, i) = e(i) / P;
      }
      out->g(c) = sum / P - 1.0;
      ++c;
    }
    for (int i = 0; i < U; ++i, ++c) {
      const ActiveRate r = RestrictedRate(s_, params_, L_, logp, i, second_order);
      if (!(r.rate > 0)) return false;
      const double R = s_.rate_requirement(i);
      out->g(c) = 1.0 - r.rate / R;
      out->jac.row(c) = -r.grad.transpose() / R;
      if (second_order) out->g_hess[c] = -r.hess / R;
      if (dw > 0) {
        const double S = s_.mean_file_size(i);
        out->f += dw * S / r.rate;
        out->grad += (-dw * S / (r.rate * r.rate)) * r.grad;
        out->hess += (2.0 * dw * S / (r.rate * r.rate * r.rate)) * (r.grad * r.grad.transpose());
        if (second_order) out->hess += (-dw * S / (r.rate * r.rate)) * r.hess;
      }
    }
    out->f /= scale_;
    out->grad /= scale_;
    out->hess /= scale_;
    return true;
  }

 private:
  const Scenario& s_;
  const ApproxParams& params_;
  const Layout& L_;
  const ObjectiveWeights& w_;
  double scale_ = 1.0;
};

// min eta over (t, eta) with relaxed caps and budgets, hard rate
// requirements.
class ViolationProgram : public ConvexProgram {
 public:
  // Powers and eta are measured in units of `scale` watts.
  ViolationProgram(const Scenario& s, const ApproxParams& params, const Layout& L, double scale)
      : s_(s), params_(params), L_(L), scale_(scale) {}

  int num_variables() const override { return L_.U + 1; }
  int num_constraints() const override {
    return 2 * L_.U + static_cast<int>(L_.busy_sbs.size()) + 1;
  }

  bool Evaluate(const Vector& z, bool second_order, ProgramEval* out) const override {
    const int U = L_.U, n = U + 1, m = num_constraints();
    const Vector t = z.head(U);
    const double eta = z(U);
    const Matrix logp = FullLogPowers(L_, t);
    const Vector e = t.array().exp() / scale_;
    out->f = eta;
    out->grad = Vector::Zero(n);
    out->grad(U) = 1.0;
    out->hess = Matrix::Zero(n, n);
    out->g.resize(m);
    out->jac = Matrix::Zero(m, n);
    out->g_hess.assign(second_order ? m : 0, Matrix::Zero(n, n));
    int c = 0;
    for (int i = 0; i < U; ++i, ++c) {
      out->g(c) = e(i) - s_.sbs(L_.serving[i]).max_tx_power_w / scale_ - eta;
      out->jac(c, i) = e(i);
      out->jac(c, U) = -1.0;
      if (second_order) out->g_hess[c](i, i) = e(i);
    }
    for (int j : L_.busy_sbs) {
      double sum = BudgetFloor(L_, j) / scale_;
      for (int i : L_.users_of[j]) {
        sum += e(i);
        out->jac(c, i) = e(i);
        if (second_order) out->g_hess[c](i, i) = e(i);
      }
      out->jac(c, U) = -1.0;
      out->g(c) = sum - s_.sbs(j).max_tx_power_w / scale_ - eta;
      ++c;
    }
    for (int i = 0; i < U; ++i, ++c) {
      const ActiveRate r = RestrictedRate(s_, params_, L_, logp, i, second_order);
      const double R = s_.rate_requirement(i);
      out->g(c) = 1.0 - r.rate / R;
      out->jac.block(c, 0, 1, U) = -r.grad.transpose() / R;
      if (second_order) out->g_hess[c].topLeftCorner(U, U) = -r.hess / R;
    }
    out->g(c) = -eta;
    out->jac(c, U) = -1.0;
    return true;
  }

 private:
  const Scenario& s_;
  const ApproxParams& params_;
  const Layout& L_;
  double scale_;
};

// Scale factor kappa_max such that kappa * p stays within every cap and
// budget for kappa < kappa_max.
double CapHeadroom(const Scenario& s, const Layout& L, const Vector& p) {
  double kappa = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L.U; ++i) kappa = std::min(kappa, s.sbs(L.serving[i]).max_tx_power_w / p(i));
  for (int j : L.busy_sbs) {
    double sum = 0;
    for (int i : L.users_of[j]) sum += p(i);
    kappa = std::min(kappa, (s.sbs(j).max_tx_power_w - BudgetFloor(L, j)) / sum);
  }
  return kappa;
}

}  // namespace

std::optional<Vector> MinimumPowers(const Scenario& s, const ApproxParams& params,
                                    const BinaryMatrix& x) {
  const Layout L = MakeLayout(s, x);
  const int U = L.U;
  const double W = s.radio().bandwidth_per_user_hz;
  Matrix A = Matrix::Identity(U, U);
  Vector rhs(U);
  for (int i = 0; i < U; ++i) {
    const int j = L.serving[i];
    const double target = std::exp2((s.rate_requirement(i) / W - params.beta(i, j)) / params.alpha(i, j));
    const double d = target / s.gain(i, j);
    double fixed = s.radio().noise_power_w;
    for (int m = 0; m < U; ++m) {
      if (m == i) continue;
      for (int l = 0; l < L.B; ++l) {
        if (l == j) continue;
        if (l == L.serving[m]) {
          A(i, m) -= d * s.gain(i, l);
        } else {
          fixed += kPowerFloorW * s.gain(i, l);
        }
      }
    }
    rhs(i) = d * fixed;
  }
  // Feasible iff the spectral radius of I - A is below one.
  const Matrix DF = Matrix::Identity(U, U) - A;
  const double radius = U > 1 ? DF.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
  if (!(radius < 1.0 - 1e-12)) return std::nullopt;
  Vector p = A.partialPivLu().solve(rhs);
  if (!p.allFinite() || (p.array() <= 0).any()) return std::nullopt;
  return p;
}

PrimalOutcome SolvePrimal(const Scenario& s, const ApproxParams& params, const BinaryMatrix& x,
                          const ObjectiveWeights& w, const IpmOptions& options) {
  w.Validate();
  const Layout L = MakeLayout(s, x);
  PrimalOutcome outcome;
  const std::optional<Vector> p_min = MinimumPowers(s, params, x);
  if (!p_min) {
    outcome.status = PrimalStatus::kInfeasible;
    outcome.message = "rate requirements unreachable at any power";
    return outcome;
  }
  const double headroom = CapHeadroom(s, L, *p_min);
  if (!(headroom > 1.0 + 1e-9)) {
    outcome.status = PrimalStatus::kInfeasible;
    outcome.message = "no strictly feasible power allocation";
    return outcome;
  }
  const double kappa = std::isfinite(headroom) ? 0.5 * (1.0 + headroom) : 2.0;
  const Vector t0 = (kappa * p_min->array()).log();

  PowerProgram program(s, params, L, w);
  // Lower bound on the optimum: minimum powers, and delays at the rate each
  // pair reaches alone at full power. Tolerances on the scaled problem then
  // stay relative to the optimum.
  double lower = w.power_weight() * s.radio().amplifier_factor * p_min->sum();
  for (int i = 0; i < L.U; ++i) {
    lower += w.delay_weight() * s.mean_file_size(i) / MaxApproxRate(s, params, i, L.serving[i]);
  }
  if (!(lower > 0)) program.Objective(t0, &lower);
  program.set_scale(std::max(lower, 1e-300));
  const IpmResult r = SolveConvexProgram(program, t0, options);
  if (!r.converged) {
    outcome.status = PrimalStatus::kNumericalFailure;
    outcome.message = "interior-point method did not converge; KKT residual " +
                      std::to_string(r.kkt_residual());
    return outcome;
  }

  PrimalSolution sol;
  sol.x = x;
  sol.log_powers = LogPower{FullLogPowers(L, r.x)};
  program.Objective(r.x, &sol.objective);
  sol.duals_mu = Matrix::Zero(L.U, L.B);
  sol.duals_budget = Vector::Zero(L.B);
  sol.duals_rate = Vector::Zero(L.U);
  const double scale = program.scale();
  int c = 0;
  for (int i = 0; i < L.U; ++i, ++c) {
    const int j = L.serving[i];
    sol.duals_mu(i, j) = scale * r.lambda(c) / s.sbs(j).max_tx_power_w;
  }
  for (int j : L.busy_sbs) sol.duals_budget(j) = scale * r.lambda(c++) / s.sbs(j).max_tx_power_w;
  for (int i = 0; i < L.U; ++i) sol.duals_rate(i) = scale * r.lambda(c++) / s.rate_requirement(i);
  sol.kkt_residual = r.kkt_residual();
  sol.iterations = r.iterations;
  const double M = DualValue(s, params, x, sol, w);
  ProgramEval e;
  program.Evaluate(r.x, false, &e);
  const double barrier_gap = -e.g.dot(r.lambda) * scale;
  sol.duality_gap = std::max(std::abs(M - sol.objective), barrier_gap) /
                    std::max(std::abs(sol.objective), 1e-300);
  outcome.status = PrimalStatus::kOptimal;
  outcome.solution = std::move(sol);
  return outcome;
}

double DualValue(const Scenario& s, const ApproxParams& params, const BinaryMatrix& x,
                 const PrimalSolution& sol, const ObjectiveWeights& w) {
  const SurrogateValue v = SurrogateObjective(s, params, x, BinaryMatrix::Zero(s.num_sbs(), s.num_files()),
                                              sol.log_powers, w);
  double M = v.f1;
  const Matrix p = sol.log_powers.ToWatts();
  for (int i = 0; i < s.num_users(); ++i) {
    for (int j = 0; j < s.num_sbs(); ++j) {
      M += sol.duals_mu(i, j) * (p(i, j) - x(i, j) * s.sbs(j).max_tx_power_w);
    }
  }
  return M;
}

FeasibilityCertificate SolveFeasibility(const Scenario& s, const ApproxParams& params,
                                        const BinaryMatrix& x, const IpmOptions& options) {
  const Layout L = MakeLayout(s, x);
  FeasibilityCertificate cert;
  cert.x = x;
  cert.duals_nu = Matrix::Zero(L.U, L.B);
  cert.duals_nu_budget = Vector::Zero(L.B);
  cert.duals_rate = Vector::Zero(L.U);
  const std::optional<Vector> p_min = MinimumPowers(s, params, x);
  if (!p_min) {
    cert.status = FeasibilityStatus::kHardInfeasible;
    return cert;
  }
  for (int i = 0; i < L.U; ++i) {
    // Violations this large are beyond what the cut machinery can resolve
    // in double precision.
    if ((*p_min)(i) > kMaxViolationRatio * s.sbs(L.serving[i]).max_tx_power_w) {
      cert.status = FeasibilityStatus::kHardInfeasible;
      return cert;
    }
  }
  const Vector p0 = 2.0 * *p_min;
  double excess = 0;
  for (int i = 0; i < L.U; ++i) {
    excess = std::max(excess, p0(i) - s.sbs(L.serving[i]).max_tx_power_w);
  }
  double p_scale = 0;
  for (int j : L.busy_sbs) {
    double sum = BudgetFloor(L, j);
    for (int i : L.users_of[j]) sum += p0(i);
    excess = std::max(excess, sum - s.sbs(j).max_tx_power_w);
    p_scale = std::max(p_scale, s.sbs(j).max_tx_power_w);
  }
  const double scale = std::max(p_scale, excess);
  Vector z0(L.U + 1);
  z0.head(L.U) = p0.array().log();
  z0(L.U) = (excess + 0.1 * p_scale) / scale;

  ViolationProgram program(s, params, L, scale);
  const IpmResult r = SolveConvexProgram(program, z0, options);
  cert.kkt_residual = r.kkt_residual();
  if (!r.converged) {
    cert.status = FeasibilityStatus::kNumericalFailure;
    return cert;
  }
  cert.eta = std::max(0.0, r.x(L.U) * scale);
  cert.log_powers = LogPower{FullLogPowers(L, r.x.head(L.U))};
  int c = 0;
  for (int i = 0; i < L.U; ++i) cert.duals_nu(i, L.serving[i]) = r.lambda(c++);
  for (int j : L.busy_sbs) cert.duals_nu_budget(j) = r.lambda(c++);
  for (int i = 0; i < L.U; ++i) cert.duals_rate(i) = scale * r.lambda(c++) / s.rate_requirement(i);
  cert.nu_sum = cert.duals_nu.sum() + cert.duals_nu_budget.sum();
  double cap_scale = 0;
  for (int j : L.busy_sbs) cap_scale = std::max(cap_scale, s.sbs(j).max_tx_power_w);
  cert.status = cert.eta > 1e-7 * cap_scale ? FeasibilityStatus::kViolated
                                            : FeasibilityStatus::kFeasible;
  // What is left is the barrier offset of the eta >= 0 bound.
  if (cert.status == FeasibilityStatus::kFeasible) cert.eta = 0;
  return cert;
}

}  // namespace jdpo
