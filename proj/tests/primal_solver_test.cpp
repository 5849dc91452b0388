#include "jdpo/primal_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "jdpo/gbd.hpp"
#include "test_util.hpp"

namespace jdpo {
namespace {

// One user, one SBS, gain 1e-10, 1 W cap.
Scenario SingleLink(double rate_bps, double size_bits = 1e6) {
  return testing::MakeScenario(Matrix::Constant(1, 1, 1e-10), {{1.0}}, {{size_bits, rate_bps}});
}

struct GridBest {
  double p = 0;
  double value = std::numeric_limits<double>::infinity();
};

// Surrogate power allocation objective of the single link, scanned over
// p = P k / n.
GridBest ScanSingleLink(const Scenario& s, const ApproxParams& params, const ObjectiveWeights& w, int n) {
  const double P = s.sbs(0).max_tx_power_w, W = s.radio().bandwidth_per_user_hz;
  const double a = params.alpha(0, 0), b = params.beta(0, 0);
  const double snr_per_watt = s.gain(0, 0) / s.radio().noise_power_w;
  GridBest best;
  for (int k = 1; k <= n; ++k) {
    const double p = P * k / n;
    const double rate = W * (a * std::log2(p * snr_per_watt) + b);
    if (rate < s.rate_requirement(0)) continue;
    const double value = w.power_weight() * s.radio().amplifier_factor * p +
                         w.delay_weight() * s.mean_file_size(0) / rate;
    if (value < best.value) best = {p, value};
  }
  return best;
}

TEST(SolvePrimalTest, SingleLinkMatchesGridSearch) {
  const Scenario s = SingleLink(1e5);
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  for (double theta : {0.2, 0.5, 0.8}) {
    ObjectiveWeights w;
    w.theta = theta;
    const PrimalOutcome out = SolvePrimal(s, params, BinaryMatrix::Ones(1, 1), w);
    ASSERT_TRUE(out.optimal()) << out.message;
    const GridBest grid = ScanSingleLink(s, params, w, 100000);
    EXPECT_LE(out.solution->objective, grid.value * (1 + 1e-8));
    EXPECT_NEAR(out.solution->objective / grid.value, 1.0, 1e-6);
    EXPECT_NEAR(std::exp(out.solution->log_powers.values(0, 0)), grid.p, 2e-5);
    EXPECT_NEAR(DualValue(s, params, out.solution->x, *out.solution, w) / grid.value, 1.0, 1e-4);
  }
}

TEST(SolvePrimalTest, UnreachableRateIsInfeasible) {
  Scenario probe = SingleLink(1e5);
  const ApproxParams params = FitParams(probe, DefaultAnchorPowers(probe));
  const double W = probe.radio().bandwidth_per_user_hz;
  const double cap_rate = W * (params.alpha(0, 0) * std::log2(1e-10 / probe.radio().noise_power_w) +
                               params.beta(0, 0));
  const Scenario s = SingleLink(cap_rate * 1.01);
  const ApproxParams p2 = FitParams(s, DefaultAnchorPowers(s));
  const PrimalOutcome out = SolvePrimal(s, p2, BinaryMatrix::Ones(1, 1), ObjectiveWeights{});
  EXPECT_EQ(out.status, PrimalStatus::kInfeasible);
}

TEST(SolvePrimalTest, InactiveCapsCarryNoMultiplier) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Scenario s = testing::Tiny(3, 4, 5, seed);
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    for (const BinaryMatrix& x : testing::AllAssociations(4, 3)) {
      const PrimalOutcome out = SolvePrimal(s, params, x, ObjectiveWeights{});
      if (!out.optimal()) continue;
      const Matrix p = out.solution->log_powers.ToWatts();
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) {
          if (!x(i, j)) continue;
          const double slack = s.sbs(j).max_tx_power_w - p(i, j);
          if (slack > 1e-3) {
            EXPECT_LE(out.solution->duals_mu(i, j), 1e-6);
          }
          EXPECT_GE(out.solution->duals_mu(i, j), 0.0);
        }
      }
    }
  }
}

TEST(SolvePrimalTest, CertificatesOnEveryFeasibleAssociation) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Scenario s = testing::Tiny(3, 3, 4, seed);
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    for (const BinaryMatrix& x : testing::AllAssociations(3, 3)) {
      const PrimalOutcome out = SolvePrimal(s, params, x, ObjectiveWeights{});
      if (!out.optimal()) continue;
      EXPECT_LE(out.solution->kkt_residual, 1e-6);
      EXPECT_LE(out.solution->duality_gap, 1e-6);
      const double m = DualValue(s, params, x, *out.solution, ObjectiveWeights{});
      EXPECT_LE(std::abs(m - out.solution->objective), 1e-6 * (1 + std::abs(out.solution->objective)));
    }
  }
}

TEST(SolvePrimalTest, InteriorOptimumDualEqualsPrimal) {
  const Scenario s = SingleLink(1e5);
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  const PrimalOutcome out = SolvePrimal(s, params, BinaryMatrix::Ones(1, 1), ObjectiveWeights{});
  ASSERT_TRUE(out.optimal());
  ASSERT_LT(std::exp(out.solution->log_powers.values(0, 0)), 0.99);
  EXPECT_NEAR(DualValue(s, params, out.solution->x, *out.solution, ObjectiveWeights{}),
              out.solution->objective, 1e-9 * out.solution->objective);
}

TEST(SolvePrimalTest, RejectsRowsThatAreNotOneHot) {
  const Scenario s = testing::Tiny(2, 2, 2, 1);
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  BinaryMatrix x = BinaryMatrix::Ones(2, 2);
  EXPECT_THROW(SolvePrimal(s, params, x, ObjectiveWeights{}), std::invalid_argument);
}

TEST(MinimumPowersTest, MeetsRatesWithEquality) {
  const Scenario s = testing::Tiny(3, 4, 5, 2);
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  const BinaryMatrix x = InitialAssociation(s, InitialStrategy::kStrongestGain);
  const std::optional<Vector> p = MinimumPowers(s, params, x);
  ASSERT_TRUE(p.has_value());
  Matrix watts = Matrix::Constant(4, 3, kPowerFloorW);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (x(i, j)) watts(i, j) = (*p)(i);
    }
  }
  const LogPower lp = LogPower::FromWatts(watts);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (x(i, j)) {
        EXPECT_NEAR(ApproxRate(s, params, lp, i, j) / s.rate_requirement(i), 1.0, 1e-8);
      }
    }
  }
}

TEST(SolveFeasibilityTest, FeasibleAssociationHasNoViolation) {
  const Scenario s = SingleLink(1e5);
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  const FeasibilityCertificate c = SolveFeasibility(s, params, BinaryMatrix::Ones(1, 1));
  EXPECT_EQ(c.status, FeasibilityStatus::kFeasible);
  EXPECT_EQ(c.eta, 0.0);
}

TEST(SolveFeasibilityTest, ForcedPairViolationByHand) {
  // Rate met exactly at 1.5 P under the bound fitted at P.
  const Scenario probe = SingleLink(1e5);
  const ApproxParams params = FitParams(probe, DefaultAnchorPowers(probe));
  const double W = probe.radio().bandwidth_per_user_hz;
  const double rate = W * (params.alpha(0, 0) * std::log2(1.5 * 1e-10 / probe.radio().noise_power_w) +
                           params.beta(0, 0));
  const Scenario s = SingleLink(rate);
  const FeasibilityCertificate c = SolveFeasibility(s, params, BinaryMatrix::Ones(1, 1));
  ASSERT_EQ(c.status, FeasibilityStatus::kViolated);
  EXPECT_NEAR(c.eta, 0.5, 1e-6);
  EXPECT_NEAR(c.duals_nu(0, 0) + c.duals_nu_budget(0), 1.0, 1e-6);
  EXPECT_NEAR(c.nu_sum, 1.0, 1e-6);
}

TEST(SolveFeasibilityTest, MultipliersSumToOne) {
  int violated = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario s = testing::Tiny(3, 4, 5, seed);
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    for (const BinaryMatrix& x : testing::AllAssociations(4, 3)) {
      const FeasibilityCertificate c = SolveFeasibility(s, params, x);
      if (c.status != FeasibilityStatus::kViolated) continue;
      ++violated;
      EXPECT_NEAR(c.nu_sum, 1.0, 1e-6);
      EXPECT_NEAR(c.duals_nu.sum() + c.duals_nu_budget.sum(), 1.0, 1e-6);
      EXPECT_GT(c.eta, 0.0);
      EXPECT_FALSE(SolvePrimal(s, params, x, ObjectiveWeights{}).optimal());
    }
  }
  EXPECT_GT(violated, 0);
}

TEST(RefitTest, SecondRefitTightensTheBoundAtTheOptimum) {
  const Scenario s = SingleLink(1e5);
  ApproxParams params = FitParams(s, Matrix::Constant(1, 1, 0.05));
  const ObjectiveWeights w;
  const BinaryMatrix x = BinaryMatrix::Ones(1, 1);
  auto gap_after = [&](int refits) {
    ApproxParams p = params;
    PrimalOutcome out = SolvePrimal(s, p, x, w);
    for (int r = 0; r < refits; ++r) {
      p = RefitIteration(s, p, out.solution->log_powers.ToWatts());
      out = SolvePrimal(s, p, x, w);
    }
    const double g = SinrForProfile(s, out.solution->log_powers.ToWatts(), 0, 0);
    return std::abs(std::log2(1 + g) - (p.alpha(0, 0) * std::log2(g) + p.beta(0, 0)));
  };
  const double one = gap_after(1), two = gap_after(2);
  EXPECT_LT(two, one);
}

}  // namespace
}  // namespace jdpo
