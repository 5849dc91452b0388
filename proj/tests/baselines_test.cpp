#include "jdpo/baselines.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "jdpo/cache_knapsack.hpp"
#include "jdpo/gbd.hpp"
#include "jdpo/primal_solver.hpp"
#include "test_util.hpp"

namespace jdpo {
namespace {

double TotalDelay(const Scenario& s, const Assignment& a) {
  double d = 0;
  for (int i = 0; i < s.num_users(); ++i) d += UserDelay(s, a, i);
  return d;
}

double TotalPower(const Scenario& s, const Assignment& a) {
  double p = 0;
  for (int j = 0; j < s.num_sbs(); ++j) p += SbsPower(s, a, j);
  return p;
}

// Same network with the SBS order given by `order`.
Scenario PermuteSbs(const Scenario& s, const std::vector<int>& order) {
  std::vector<SbsSpec> sbss;
  Matrix gains(s.num_users(), s.num_sbs());
  for (int n = 0; n < s.num_sbs(); ++n) {
    sbss.push_back(s.sbs(order[n]));
    gains.col(n) = s.gains().col(order[n]);
  }
  return Scenario(s.radio(), sbss, s.users(), s.files(), gains, s.rng_seed());
}

TEST(CcpPolicyTest, PopularCachesStrongestLinksMinimumPower) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = testing::Tiny(3, 4, 5, seed);
    const PolicyResult r = CcpPolicy(s, ObjectiveWeights{});
    ASSERT_TRUE(r.feasible) << r.message;
    EXPECT_EQ(r.policy_name, "ccp");
    EXPECT_EQ(r.assignment.association, InitialAssociation(s, InitialStrategy::kStrongestGain));
    EXPECT_EQ(r.assignment.placement, PopularityPlacement(s));
    for (int j = 1; j < 3; ++j) EXPECT_EQ(r.assignment.placement.row(j), r.assignment.placement.row(0));
    // Minimum power meets every surrogate rate with equality.
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    const LogPower lp = LogPower::FromWatts(r.assignment.tx_power_w.cwiseMax(kPowerFloorW));
    for (int i = 0; i < 4; ++i) {
      const int j = r.assignment.ServingSbs(i);
      EXPECT_NEAR(ApproxRate(s, params, lp, i, j) / s.rate_requirement(i), 1.0, 1e-8);
    }
  }
}

TEST(CcpPolicyTest, UniformPreferencesFillEveryCacheTheSame) {
  SbsSpec sbs;
  sbs.cache_capacity_bits = 2.5e6;
  Matrix gains(2, 2);
  gains << 2e-10, 1e-10, 1e-10, 2e-10;
  const std::vector<double> uniform(4, 0.25);
  const Scenario s = testing::MakeScenario(gains, {uniform, uniform},
                                           {{1e6, 5e4}, {1e6, 5e4}, {1e6, 5e4}, {1e6, 5e4}}, {}, sbs);
  const PolicyResult r = CcpPolicy(s, ObjectiveWeights{});
  ASSERT_TRUE(r.feasible) << r.message;
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(r.assignment.placement(j, 0), 1);
    EXPECT_EQ(r.assignment.placement(j, 1), 1);
    EXPECT_EQ(r.assignment.placement(j, 2), 0);
    EXPECT_EQ(r.assignment.placement(j, 3), 0);
  }
}

TEST(DfPolicyTest, SingleSbsPlacementMatchesEnumeration) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = testing::Tiny(1, 3, 5, seed);
    const PolicyResult r = DfPolicy(s, ObjectiveWeights{});
    ASSERT_TRUE(r.feasible) << r.message;
    double best = std::numeric_limits<double>::infinity();
    Assignment a = r.assignment;
    for (int code = 0; code < 1 << 5; ++code) {
      double used = 0;
      for (int k = 0; k < 5; ++k) {
        a.placement(0, k) = code >> k & 1;
        used += a.placement(0, k) * s.file(k).size_bits;
      }
      if (used <= s.sbs(0).cache_capacity_bits) best = std::min(best, TotalDelay(s, a));
    }
    EXPECT_NEAR(TotalDelay(s, r.assignment), best, 1e-9 * best);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.assignment.tx_power_w(i, 0), s.sbs(0).max_tx_power_w / 3, 1e-15);
  }
}

TEST(DfPolicyTest, DelayNoWorseThanCcp) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Scenario s = testing::Tiny(3, 4, 5, seed);
    const PolicyResult df = DfPolicy(s, ObjectiveWeights{});
    const PolicyResult ccp = CcpPolicy(s, ObjectiveWeights{});
    ASSERT_TRUE(df.feasible && ccp.feasible) << "seed " << seed;
    EXPECT_LE(df.report.average_delay_s(), ccp.report.average_delay_s() * (1 + 1e-12)) << "seed " << seed;
    EXPECT_GE(df.report.total_power_w(), ccp.report.total_power_w()) << "seed " << seed;
  }
}

TEST(DfPolicyTest, PowerNoBetterThanPowerOnlyApuf) {
  ObjectiveWeights power_only;
  power_only.theta = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = testing::Tiny(2, 3, 3, seed);
    const PolicyResult df = DfPolicy(s, power_only);
    const GbdResult apuf = RunApuf(s, power_only, GbdConfig{});
    ASSERT_TRUE(df.feasible && apuf.has_solution) << "seed " << seed;
    EXPECT_GE(df.report.total_power_w(), TotalPower(s, apuf.best_assignment)) << "seed " << seed;
  }
}

TEST(ExhaustiveOracleTest, OneLinkMatchesLineSearch) {
  // One user, one SBS, one file that fits the cache: F2 is fixed and the
  // power is the only choice.
  const Scenario s = testing::MakeScenario(Matrix::Constant(1, 1, 1e-10), {{1.0}}, {{2e6, 1e5}});
  const ObjectiveWeights w;
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  const OracleResult r = ExhaustiveOracle(s, w, params);
  ASSERT_TRUE(std::isfinite(r.surrogate.objective_surrogate));
  EXPECT_EQ(r.associations_enumerated, 1);
  EXPECT_EQ(r.surrogate.assignment.placement(0, 0), 1);

  const double a = params.alpha(0, 0), b = params.beta(0, 0);
  const double W = s.radio().bandwidth_per_user_hz, snr = 1e-10 / s.radio().noise_power_w;
  auto f = [&](double p) {
    const double rate = W * (a * std::log2(p * snr) + b);
    if (rate < s.rate_requirement(0)) return std::numeric_limits<double>::infinity();
    return w.power_weight() * s.radio().amplifier_factor * p + w.delay_weight() * 2e6 / rate;
  };
  double lo = 1e-9, hi = 1.0;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (f(m1) < f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  BinaryMatrix y = BinaryMatrix::Ones(1, 1);
  const double expected = f(0.5 * (lo + hi)) + F2(s, BinaryMatrix::Ones(1, 1), y, w);
  EXPECT_NEAR(r.surrogate.objective_surrogate / expected, 1.0, 1e-7);
}

TEST(ExhaustiveOracleTest, NoPolicyBeatsIt) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Scenario s = testing::Tiny(2 + seed % 2, 3, 4, seed);
    const ObjectiveWeights w;
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    const double oracle = ExhaustiveOracle(s, w, params).surrogate.objective_surrogate;
    const double tol = 1e-6 * oracle;
    for (const PolicyResult& p : {CcpPolicy(s, w, params), DfPolicy(s, w, params)}) {
      if (p.feasible) {
        EXPECT_LE(oracle, p.objective_surrogate + tol) << p.policy_name << " seed " << seed;
      }
    }
    const GbdResult puf = RunGbd(s, w, GbdConfig{}, params);
    EXPECT_LE(oracle, puf.upper_bound + tol);
  }
}

TEST(ExhaustiveOracleTest, IndependentOfSbsOrder) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Scenario s = testing::Tiny(3, 3, 3, seed);
    const Scenario p = PermuteSbs(s, {2, 0, 1});
    const ObjectiveWeights w;
    const double a = ExhaustiveOracle(s, w, FitParams(s, DefaultAnchorPowers(s))).surrogate.objective_surrogate;
    const double b = ExhaustiveOracle(p, w, FitParams(p, DefaultAnchorPowers(p))).surrogate.objective_surrogate;
    EXPECT_NEAR(a, b, 1e-9 * a) << "seed " << seed;
  }
}

TEST(ExhaustiveOracleTest, ExactGridIsFeasible) {
  const Scenario s = testing::Tiny(2, 2, 3, 3);
  OracleLimits limits;
  limits.exact_grid = true;
  limits.grid_points = 20;
  const OracleResult r = ExhaustiveOracle(s, ObjectiveWeights{}, FitParams(s, DefaultAnchorPowers(s)), limits);
  ASSERT_TRUE(r.exact_grid.has_value());
  EXPECT_TRUE(r.exact_grid->feasible);
  EXPECT_TRUE(CheckFeasibility(s, r.exact_grid->assignment).empty());
}

TEST(ExhaustiveOracleTest, RefusesLargeInstances) {
  const ObjectiveWeights w;
  const Scenario wide = testing::Tiny(3, 5, 3, 1);
  EXPECT_THROW(ExhaustiveOracle(wide, w, FitParams(wide, DefaultAnchorPowers(wide))), std::invalid_argument);
  const Scenario deep = testing::Tiny(3, 2, 6, 1);
  EXPECT_THROW(ExhaustiveOracle(deep, w, FitParams(deep, DefaultAnchorPowers(deep))), std::invalid_argument);
}

}  // namespace
}  // namespace jdpo
