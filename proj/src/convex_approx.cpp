#include "jdpo/convex_approx.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace jdpo {

LogPower LogPower::FromWatts(const Matrix& watts) {
  return LogPower{watts.array().max(kPowerFloorW).log().matrix()};
}

AnchorConstants FitAnchor(double gamma0) {
  if (!(gamma0 > 0) || !std::isfinite(gamma0)) {
    throw std::invalid_argument("anchor SINR must be positive and finite");
  }
  AnchorConstants c;
  c.alpha = gamma0 / (1.0 + gamma0);
  c.beta = std::log2(1.0 + gamma0) - c.alpha * std::log2(gamma0);
  return c;
}

Matrix DefaultAnchorPowers(const Scenario& s) {
  Matrix p(s.num_users(), s.num_sbs());
  for (int j = 0; j < s.num_sbs(); ++j) {
    p.col(j).setConstant(s.sbs(j).max_tx_power_w / s.num_users());
  }
  return p;
}

ApproxParams FitParams(const Scenario& s, const Matrix& anchor) {
  const int U = s.num_users(), B = s.num_sbs();
  if (anchor.rows() != U || anchor.cols() != B) {
    throw std::invalid_argument("anchor power matrix must be users x SBSs");
  }
  ApproxParams params{Matrix(U, B), Matrix(U, B), Matrix(U, B)};
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      const double g0 = SinrForProfile(s, anchor, i, j);
      const AnchorConstants c = FitAnchor(g0);
      params.alpha(i, j) = c.alpha;
      params.beta(i, j) = c.beta;
      params.anchor_sinr(i, j) = g0;
    }
  }
  return params;
}

ApproxParams RefitIteration(const Scenario& s, const ApproxParams& params,
                            const Matrix& current) {
  ApproxParams out = params;
  for (int i = 0; i < s.num_users(); ++i) {
    for (int j = 0; j < s.num_sbs(); ++j) {
      if (current(i, j) <= 10 * kPowerFloorW) continue;
      const double g0 = SinrForProfile(s, current, i, j);
      const AnchorConstants c = FitAnchor(g0);
      out.alpha(i, j) = c.alpha;
      out.beta(i, j) = c.beta;
      out.anchor_sinr(i, j) = g0;
    }
  }
  return out;
}

double ApproxRate(const Scenario& s, const ApproxParams& params, const LogPower& lp, int i,
                  int j) {
  const Matrix p = lp.ToWatts();
  const double interference = Interference(s, p, i, j);
  const double log2_sinr = (lp.values(i, j) + std::log(s.gain(i, j)) - std::log(interference)) / kLn2;
  return s.radio().bandwidth_per_user_hz * (params.alpha(i, j) * log2_sinr + params.beta(i, j));
}

RateDerivatives ApproxRateDerivatives(const Scenario& s, const ApproxParams& params,
                                      const Matrix& logp, int i, int j, bool with_hessian) {
  const int U = s.num_users(), B = s.num_sbs();
  const double W = s.radio().bandwidth_per_user_hz;
  const double a = params.alpha(i, j);
  // Interferer weights p_ml g_il / I on the flattened coordinates.
  Vector weight = Vector::Zero(U * B);
  double interference = s.radio().noise_power_w;
  for (int m = 0; m < U; ++m) {
    if (m == i) continue;
    for (int l = 0; l < B; ++l) {
      if (l == j) continue;
      const double term = std::exp(logp(m, l)) * s.gain(i, l);
      weight(PairIndex(m, l, B)) = term;
      interference += term;
    }
  }
  weight /= interference;
  RateDerivatives out;
  const double log2_sinr = (logp(i, j) + std::log(s.gain(i, j)) - std::log(interference)) / kLn2;
  out.rate = W * (a * log2_sinr + params.beta(i, j));
  const double scale = W * a / kLn2;
  out.grad = -scale * weight;
  out.grad(PairIndex(i, j, B)) = scale;
  if (with_hessian) {
    out.hess = scale * (weight * weight.transpose());
    out.hess.diagonal() -= scale * weight;
  }
  return out;
}

double MaxApproxRate(const Scenario& s, const ApproxParams& params, int i, int j) {
  Matrix logp = Matrix::Constant(s.num_users(), s.num_sbs(), std::log(kPowerFloorW));
  logp(i, j) = std::log(s.sbs(j).max_tx_power_w);
  return ApproxRate(s, params, LogPower{logp}, i, j);
}

SurrogateValue SurrogateObjective(const Scenario& s, const ApproxParams& params,
                                  const BinaryMatrix& x, const BinaryMatrix& y,
                                  const LogPower& lp, const ObjectiveWeights& w) {
  const int U = s.num_users(), B = s.num_sbs();
  SurrogateValue out;
  const double pw = w.power_weight(), dw = w.delay_weight();
  const Matrix p = lp.ToWatts();
  out.f1 = pw * s.radio().amplifier_factor * p.sum();
  out.gradient_f1 = pw * s.radio().amplifier_factor * p;
  for (int i = 0; i < U; ++i) {
    for (int j = 0; j < B; ++j) {
      if (!x(i, j)) continue;
      const RateDerivatives r = ApproxRateDerivatives(s, params, lp.values, i, j, false);
      if (!(r.rate > 0)) {
        out.in_domain = false;
        continue;
      }
      if (dw == 0) continue;
      const double S = s.mean_file_size(i);
      out.f1 += dw * S / r.rate;
      const double dh = -dw * S / (r.rate * r.rate);
      for (int m = 0; m < U; ++m) {
        for (int l = 0; l < B; ++l) out.gradient_f1(m, l) += dh * r.grad(PairIndex(m, l, B));
      }
    }
  }
  out.f2 = F2(s, x, y, w);
  if (!out.in_domain) out.f1 = std::numeric_limits<double>::infinity();
  out.total = out.f1 + out.f2;
  return out;
}

void WriteParamsCsv(std::ostream& out, const ApproxParams& params) {
  out << "i,j,alpha,beta,gamma0\n";
  out.precision(17);
  for (int i = 0; i < params.alpha.rows(); ++i) {
    for (int j = 0; j < params.alpha.cols(); ++j) {
      out << i << ',' << j << ',' << params.alpha(i, j) << ',' << params.beta(i, j) << ','
          << params.anchor_sinr(i, j) << '\n';
    }
  }
}

}  // namespace jdpo
