#include "jdpo/sdr_master.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "jdpo/cache_knapsack.hpp"

namespace jdpo {
namespace {

// Accumulates one linear form over entries of Y, coef * Y_ab.
class Form {
 public:
  void Add(int a, int b, double coef) {
    if (coef == 0) return;
    if (a > b) std::swap(a, b);
    entries_.push_back({a, b, a == b ? coef : 0.5 * coef});
  }
  std::vector<SymEntry> Take() { return std::move(entries_); }

 private:
  std::vector<SymEntry> entries_;
};

class Builder {
 public:
  explicit Builder(SdrProblem* p) : p_(p) {}

  void Equality(Form form, double rhs, const char* label) {
    p_->sdp.constraints.push_back({form.Take(), {}, rhs});
    p_->labels.push_back(label);
    p_->slack_sign.push_back(0);
  }

  // form <= rhs when sign = +1, form >= rhs when sign = -1.
  void Inequality(Form form, double rhs, int sign, const char* label) {
    const int slack = p_->sdp.lp_dim++;
    p_->sdp.constraints.push_back({form.Take(), {{slack, static_cast<double>(sign)}}, rhs});
    p_->labels.push_back(label);
    p_->slack_sign.push_back(sign);
  }

 private:
  SdrProblem* p_;
};

double CutScale(const Cut& c) {
  double scale = std::abs(c.const_term);
  for (int i = 0; i < c.x_coeffs.size(); ++i) scale = std::max(scale, std::abs(c.x_coeffs(i)));
  return 1.0 / std::max(1.0, scale);
}

// Capacity rows are divided by the capacity, or by the largest possible
// load when the capacity is zero.
double RowScale(double capacity, double largest_load) {
  if (capacity > 0) return capacity;
  return largest_load > 0 ? largest_load : 1.0;
}

}  // namespace

SdrProblem BuildSdr(const Scenario& s, const BinaryMatrix& admissible,
                    const std::vector<Cut>& cuts, const ObjectiveWeights& w,
                    int max_lifted_dim) {
  const int U = s.num_users(), B = s.num_sbs(), F = s.num_files();
  if (U * B + B * F + 1 > max_lifted_dim) {
    throw std::invalid_argument("lifted dimension " + std::to_string(U * B + B * F + 1) +
                                " exceeds the SDR limit; use the exact master");
  }
  SdrProblem p;
  p.num_users = U;
  p.num_sbs = B;
  p.num_files = F;
  p.x_index.assign(U * B, -1);
  p.y_index.assign(B * F, -1);
  int next = 1;
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      if (admissible(i, j)) p.x_index[i * B + j] = next++;
    }
  }
  for (int j = 0; j < B; ++j) {
    for (int k = 0; k < F; ++k) p.y_index[j * F + k] = next++;
  }
  p.phi_index = next++;
  p.sdp.psd_dim = next;
  Builder build(&p);
  auto X = [&](int i, int j) { return p.x_index[i * B + j]; };
  auto Y = [&](int j, int k) { return p.y_index[j * F + k]; };

  // Objective phi + F2.
  Form objective;
  objective.Add(0, p.phi_index, 1.0);
  const double pw = w.power_weight(), dw = w.delay_weight();
  for (int j = 0; j < B; ++j) {
    const SbsSpec& sbs = s.sbs(j);
    p.objective_constant += pw * sbs.circuit_power_w;
    for (int k = 0; k < F; ++k) {
      objective.Add(0, Y(j, k), pw * sbs.cache_coeff_w_per_bit * s.file(k).size_bits);
    }
    for (int i = 0; i < U; ++i) {
      if (X(i, j) < 0) continue;
      for (int k = 0; k < F; ++k) {
        const double miss = s.preference(i, k) *
                            (pw * sbs.backhaul_coeff_w_per_bps * s.file(k).rate_requirement_bps +
                             dw * sbs.backhaul_delay_s);
        objective.Add(0, X(i, j), miss);
        objective.Add(X(i, j), Y(j, k), -miss);
      }
    }
  }
  p.sdp.c_psd = objective.Take();

  Form unit;
  unit.Add(0, 0, 1.0);
  build.Equality(std::move(unit), 1.0, "unit");
  for (int i = 0; i < U; ++i) {
    Form assign;
    for (int j = 0; j < B; ++j) {
      if (X(i, j) >= 0) assign.Add(0, X(i, j), 1.0);
    }
    build.Equality(std::move(assign), 1.0, "assign");
  }
  for (int d = 1; d < p.phi_index; ++d) {
    Form binary;
    binary.Add(d, d, 1.0);
    binary.Add(0, d, -1.0);
    build.Equality(std::move(binary), 0.0, "binary");
  }
  for (int j = 0; j < B; ++j) {
    const double cap = s.sbs(j).cache_capacity_bits;
    double total = 0;
    for (int k = 0; k < F; ++k) total += s.file(k).size_bits;
    const double scale = RowScale(cap, total);
    Form cache;
    for (int k = 0; k < F; ++k) cache.Add(0, Y(j, k), s.file(k).size_bits / scale);
    build.Inequality(std::move(cache), cap / scale, 1, "cache");
  }
  for (int j = 0; j < B; ++j) {
    const double cap = s.sbs(j).backhaul_capacity_bps;
    double total = 0;
    for (int i = 0; i < U; ++i) total += s.rate_requirement(i);
    const double scale = RowScale(cap, total);
    Form backhaul;
    for (int i = 0; i < U; ++i) {
      if (X(i, j) < 0) continue;
      for (int k = 0; k < F; ++k) {
        const double load = s.preference(i, k) * s.file(k).rate_requirement_bps / scale;
        backhaul.Add(0, X(i, j), load);
        backhaul.Add(X(i, j), Y(j, k), -load);
      }
    }
    build.Inequality(std::move(backhaul), cap / scale, 1, "backhaul");
  }
  double phi_bound = 1.0;
  for (const Cut& c : cuts) {
    const double scale = CutScale(c);
    Form form;
    double reach = c.const_term;
    for (int i = 0; i < U; ++i) {
      for (int j = 0; j < B; ++j) {
        if (X(i, j) < 0) continue;
        form.Add(0, X(i, j), scale * c.x_coeffs(i, j));
        reach += std::max(0.0, c.x_coeffs(i, j));
      }
    }
    if (c.kind == CutKind::kOptimality) {
      // const + a^T x <= phi.
      form.Add(0, p.phi_index, -scale);
      build.Inequality(std::move(form), -scale * c.const_term, 1, "optimality_cut");
      phi_bound = std::max(phi_bound, 2.0 * reach);
    } else {
      build.Inequality(std::move(form), scale * (kCutExclusionTol - c.const_term), 1,
                       "feasibility_cut");
    }
  }
  p.phi_bound = phi_bound;
  Form phi_nonneg;
  phi_nonneg.Add(0, p.phi_index, 1.0);
  build.Inequality(std::move(phi_nonneg), 0.0, -1, "phi_nonneg");
  Form phi_cap;
  phi_cap.Add(p.phi_index, p.phi_index, 1.0 / (phi_bound * phi_bound));
  build.Inequality(std::move(phi_cap), 1.0, 1, "phi_bound");
  // Product bounds for every lifted x_ij y_jk.
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      if (X(i, j) < 0) continue;
      for (int k = 0; k < F; ++k) {
        const int a = X(i, j), b = Y(j, k);
        Form upper_x, upper_y, lower_sum, lower_zero;
        upper_x.Add(a, b, 1.0);
        upper_x.Add(0, a, -1.0);
        build.Inequality(std::move(upper_x), 0.0, 1, "product");
        upper_y.Add(a, b, 1.0);
        upper_y.Add(0, b, -1.0);
        build.Inequality(std::move(upper_y), 0.0, 1, "product");
        lower_sum.Add(a, b, 1.0);
        lower_sum.Add(0, a, -1.0);
        lower_sum.Add(0, b, -1.0);
        build.Inequality(std::move(lower_sum), -1.0, -1, "product");
        lower_zero.Add(a, b, 1.0);
        build.Inequality(std::move(lower_zero), 0.0, -1, "product");
      }
    }
  }
  p.sdp.c_lp = Vector::Zero(p.sdp.lp_dim);
  return p;
}

Matrix LiftPoint(const SdrProblem& p, const BinaryMatrix& x, const BinaryMatrix& y, double phi) {
  Vector z = Vector::Zero(p.sdp.psd_dim);
  z(0) = 1.0;
  for (int i = 0; i < p.num_users; ++i) {
    for (int j = 0; j < p.num_sbs; ++j) {
      const int d = p.x_index[i * p.num_sbs + j];
      if (d >= 0) z(d) = x(i, j);
    }
  }
  for (int j = 0; j < p.num_sbs; ++j) {
    for (int k = 0; k < p.num_files; ++k) z(p.y_index[j * p.num_files + k]) = y(j, k);
  }
  z(p.phi_index) = phi;
  return z * z.transpose();
}

LiftedEvaluation EvaluateLifted(const SdrProblem& p, const Matrix& Y) {
  const int n = p.sdp.psd_dim;
  LiftedEvaluation out;
  out.objective = DenseSymmetric(p.sdp.c_psd, n).cwiseProduct(Y).sum() + p.objective_constant;
  out.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p.sdp.constraints.size(); ++k) {
    const SdpConstraint& c = p.sdp.constraints[k];
    const double value = DenseSymmetric(c.psd, n).cwiseProduct(Y).sum();
    if (p.slack_sign[k] == 0) {
      out.equality_residual = std::max(out.equality_residual, std::abs(value - c.rhs));
    } else {
      out.min_slack = std::min(out.min_slack, (c.rhs - value) / p.slack_sign[k]);
    }
  }
  return out;
}

SdrSolution SolveSdr(const SdrProblem& p, const SdpOptions& options) {
  const SdpResult r = SolveSdp(p.sdp, options);
  SdrSolution out;
  out.converged = r.converged;
  out.lifted_matrix = r.X;
  out.relaxed_objective = r.dual_objective + p.objective_constant;
  out.primal_relaxed_objective = r.primal_objective + p.objective_constant;
  out.sdp_iterations = r.iterations;
  return out;
}

void RoundSdr(const Scenario& s, const SdrProblem& p, const std::vector<Cut>& cuts,
              const ObjectiveWeights& w, int trials, std::uint64_t seed, SdrSolution* sol) {
  const int U = s.num_users(), B = s.num_sbs(), F = s.num_files();
  const int n = p.sdp.psd_dim - 1;
  const Matrix& Y = sol->lifted_matrix;
  const Vector mean = Y.block(1, 0, n, 1);
  Matrix cov = Y.block(1, 1, n, n) - mean * mean.transpose();
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Matrix factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  sol->rounding_trials = trials;
  sol->feasible_samples = 0;
  sol->best_rounded.reset();
  Vector g(n);
  for (int t = 0; t < trials; ++t) {
    for (int d = 0; d < n; ++d) g(d) = normal(rng);
    const Vector z = mean + factor * g;
    auto at = [&](int index) { return z(index - 1); };
    BinaryMatrix x = BinaryMatrix::Zero(U, B);
    for (int i = 0; i < U; ++i) {
      int pick = -1;
      for (int j = 0; j < B; ++j) {
        const int d = p.x_index[i * B + j];
        if (d >= 0 && (pick < 0 || at(d) > at(p.x_index[i * B + pick]))) pick = j;
      }
      x(i, pick) = 1;
    }
    BinaryMatrix y = BinaryMatrix::Zero(B, F);
    for (int j = 0; j < B; ++j) {
      for (int k = 0; k < F; ++k) y(j, k) = at(p.y_index[j * F + k]) >= 0.5 ? 1 : 0;
      std::vector<int> users;
      for (int i = 0; i < U; ++i) {
        if (x(i, j)) users.push_back(i);
      }
      const PlacementProblem pp = MakePlacementProblem(s, w, j, users);
      double load = 0;
      for (int k = 0; k < F; ++k) load += y(j, k) * s.file(k).size_bits;
      while (load > s.sbs(j).cache_capacity_bits) {
        int drop = -1;
        for (int k = 0; k < F; ++k) {
          if (y(j, k) && (drop < 0 || pp.value[k] < pp.value[drop])) drop = k;
        }
        y(j, drop) = 0;
        load -= s.file(drop).size_bits;
      }
    }
    if (ExcludedByCuts(cuts, x)) continue;
    Assignment a = Assignment::Empty(s);
    a.association = x;
    a.placement = y;
    bool backhaul_ok = true;
    for (const ConstraintMargin& m : ConstraintMargins(s, a)) {
      if (m.id == "backhaul" && m.margin < -kFeasibilityTol) backhaul_ok = false;
    }
    if (!backhaul_ok) continue;
    ++sol->feasible_samples;
    const double phi = PhiAt(cuts, x);
    const double f2 = F2(s, x, y, w);
    if (!sol->best_rounded || phi + f2 < sol->best_rounded->objective) {
      sol->best_rounded = MasterSolution{x, y, phi, f2, phi + f2, MasterMode::kSdr};
    }
  }
}

}  // namespace jdpo
