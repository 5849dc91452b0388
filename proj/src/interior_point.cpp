#include "jdpo/interior_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jdpo {
namespace {

void FillResiduals(const ProgramEval& e, IpmResult* r) {
  r->objective = e.f;
  r->stationarity = (e.grad + e.jac.transpose() * r->lambda).lpNorm<Eigen::Infinity>();
  r->primal_infeasibility = e.g.size() ? std::max(0.0, e.g.maxCoeff()) : 0.0;
  r->dual_infeasibility = r->lambda.size() ? std::max(0.0, -r->lambda.minCoeff()) : 0.0;
  r->complementarity =
      e.g.size() ? (r->lambda.array() * e.g.array()).abs().maxCoeff() : 0.0;
}

double KktMerit(const IpmResult& r) {
  return std::max(r.stationarity, r.complementarity);
}

// Primal-dual Newton steps on the perturbed KKT system with free multipliers.
// Past the barrier precision floor lambda = 1/(t(-g)) is too noisy, this is not.
void Polish(const ConvexProgram& program, const IpmOptions& options, ProgramEval* e,
            IpmResult* r) {
  const int n = r->x.size();
  const int m = r->lambda.size();
  const double target = 0.01 * options.tolerance;
  ProgramEval trial;
  IpmResult candidate;
  for (int it = 0; it < 20 && KktMerit(*r) > target; ++it) {
    Matrix K = Matrix::Zero(n + m, n + m);
    Matrix h = e->hess;
    for (int c = 0; c < m; ++c) h += r->lambda(c) * e->g_hess[c];
    K.topLeftCorner(n, n) = h;
    K.topRightCorner(n, m) = e->jac.transpose();
    K.bottomLeftCorner(m, n) = -(r->lambda.asDiagonal() * e->jac);
    K.bottomRightCorner(m, m) = Matrix((-e->g).asDiagonal());
    Vector rhs(n + m);
    rhs.head(n) = -(e->grad + e->jac.transpose() * r->lambda);
    rhs.tail(m) = (r->lambda.array() * e->g.array()).matrix() +
                  Vector::Constant(m, target / std::max(1, m));
    const Vector d = K.partialPivLu().solve(rhs);
    if (!d.allFinite()) return;
    const Vector dx = d.head(n);
    const Vector dl = d.tail(m);
    double s = 1.0;
    for (int c = 0; c < m; ++c) {
      if (dl(c) < 0) s = std::min(s, -0.99 * r->lambda(c) / dl(c));
    }
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt, s *= 0.5) {
      candidate.x = r->x + s * dx;
      candidate.lambda = r->lambda + s * dl;
      if (!program.Evaluate(candidate.x, true, &trial)) continue;
      if (m > 0 && trial.g.maxCoeff() >= 0) continue;
      FillResiduals(trial, &candidate);
      if (KktMerit(candidate) < KktMerit(*r)) {
        candidate.iterations = r->iterations + 1;
        *r = candidate;
        *e = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return;
  }
}

}  // namespace

double IpmResult::kkt_residual() const {
  return std::max({stationarity, primal_infeasibility, dual_infeasibility, complementarity});
}

IpmResult SolveConvexProgram(const ConvexProgram& program, const Vector& x0,
                             const IpmOptions& options) {
  const int m = program.num_constraints();
  IpmResult result;
  result.x = x0;
  ProgramEval e;
  if (!program.Evaluate(result.x, true, &e) || (m > 0 && e.g.maxCoeff() >= 0)) {
    throw std::invalid_argument("interior-point start is not strictly feasible");
  }
  // Barrier function t f - sum log(-g) and its derivatives.
  auto barrier = [m](const ProgramEval& ev, double t) {
    double value = t * ev.f;
    for (int c = 0; c < m; ++c) value -= std::log(-ev.g(c));
    return value;
  };
  double t = m > 0 ? std::max(1.0, m / (1.0 + std::abs(e.f))) : 1.0;
  int iter = 0;
  ProgramEval trial;
  auto finish = [&](bool polish) {
    result.lambda = m > 0 ? Vector((-1.0 / (t * e.g.array())).matrix()) : Vector();
    FillResiduals(e, &result);
    result.iterations = iter;
    if (polish && m > 0 && KktMerit(result) > options.tolerance) {
      Polish(program, options, &e, &result);
    }
    result.converged =
        result.stationarity <= options.tolerance && result.complementarity <= options.tolerance;
  };
  while (true) {
    // Centering.
    bool stalled = false;
    int pure_without_progress = 0;
    double best_grad = std::numeric_limits<double>::infinity();
    while (iter < options.max_iterations) {
      Vector grad = t * e.grad;
      Matrix H = t * e.hess;
      for (int c = 0; c < m; ++c) {
        const double inv = -1.0 / e.g(c);
        const Vector gc = e.jac.row(c).transpose();
        grad += inv * gc;
        H += inv * e.g_hess[c] + (inv * inv) * (gc * gc.transpose());
      }
      const double grad_norm = grad.lpNorm<Eigen::Infinity>();
      if (grad_norm <= 0.1 * options.tolerance * t) break;
      Eigen::LDLT<Matrix> ldlt(H);
      Vector dx = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
        Matrix Hr = H;
        Hr.diagonal().array() += 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        dx = Hr.ldlt().solve(-grad);
      }
      const double decrement = -grad.dot(dx);
      if (!dx.allFinite() || !(decrement > 1e-30)) {
        stalled = true;
        break;
      }
      // Inside the quadratic region the decrease drops below the rounding of
      // phi, so only feasibility is enforced there.
      const bool pure_newton = decrement < 1e-3;
      if (pure_newton) {
        pure_without_progress = grad_norm < 0.5 * best_grad ? 0 : pure_without_progress + 1;
        if (pure_without_progress >= 3) {
          stalled = true;
          break;
        }
      }
      best_grad = std::min(best_grad, grad_norm);
      const double phi0 = barrier(e, t);
      double s = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt, s *= options.backtrack) {
        const Vector x_new = result.x + s * dx;
        if (!program.Evaluate(x_new, true, &trial)) continue;
        if (m > 0 && trial.g.maxCoeff() >= 0) continue;
        const double phi = barrier(trial, t);
        const bool ok = pure_newton ? phi <= phi0 + 1e-10 * std::max(1.0, std::abs(phi0))
                                    : phi <= phi0 - options.armijo * s * decrement;
        if (ok) {
          result.x = x_new;
          e = std::move(trial);
          accepted = true;
          break;
        }
      }
      ++iter;
      if (options.trace) {
        options.trace->push_back({iter, t, grad_norm / t, m / t, accepted ? s : 0.0});
      }
      if (!accepted) {
        stalled = true;
        break;
      }
    }
    if (stalled || iter >= options.max_iterations || m == 0) {
      finish(true);
      return result;
    }
    finish(false);
    if (result.converged) return result;
    t *= options.mu_factor;
  }
}

}  // namespace jdpo
