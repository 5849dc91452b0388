#include "jdpo/gbd.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "jdpo/primal_solver.hpp"
#include "test_util.hpp"

namespace jdpo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Power allocation optimum plus F2, minimized over every enumerated (x, y).
double EnumeratedOptimum(const Scenario& s, const ObjectiveWeights& w) {
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  const int B = s.num_sbs(), F = s.num_files();
  double best = kInf;
  for (const BinaryMatrix& x : testing::AllAssociations(s.num_users(), B)) {
    const PrimalOutcome out = SolvePrimal(s, params, x, w);
    if (!out.optimal()) continue;
    for (int code = 0; code < 1 << (B * F); ++code) {
      Assignment a = Assignment::Empty(s);
      a.association = x;
      for (int n = 0; n < B * F; ++n) a.placement(n / F, n % F) = code >> n & 1;
      bool fits = true;
      for (const ConstraintMargin& m : ConstraintMargins(s, a)) {
        if ((m.id == "cache" || m.id == "backhaul") && m.margin < 0) fits = false;
      }
      if (fits) best = std::min(best, out.solution->objective + F2(s, x, a.placement, w));
    }
  }
  return best;
}

void ExpectMonotoneTrace(const GbdResult& r) {
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t t = 0; t < r.trace.size(); ++t) {
    const TraceRow& row = r.trace[t];
    EXPECT_EQ(row.t, static_cast<int>(t) + 1);
    if (std::isfinite(row.ub) && std::isfinite(row.lb)) {
      EXPECT_GE(row.ub, row.lb - 1e-6) << "t " << row.t;
    }
    if (t == 0) continue;
    EXPECT_LE(row.ub, r.trace[t - 1].ub) << "t " << row.t;
    EXPECT_GE(row.lb, r.trace[t - 1].lb) << "t " << row.t;
  }
}

TEST(RunGbdTest, MatchesEnumerationOnTwoSbsTwoUsers) {
  GbdConfig config;
  config.epsilon = 1e-3;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Scenario s = testing::Tiny(2, 2, 3, seed);
    const GbdResult r = RunGbd(s, ObjectiveWeights{}, config);
    const double oracle = EnumeratedOptimum(s, ObjectiveWeights{});
    ASSERT_TRUE(r.has_solution) << "seed " << seed;
    EXPECT_EQ(r.status, GbdStatus::kEpsilonOptimal);
    EXPECT_LE(r.upper_bound - r.lower_bound, 1e-3);
    EXPECT_LE(std::abs(r.upper_bound - oracle), 1e-3 + 1e-5) << "seed " << seed;
    EXPECT_LE(r.lower_bound, oracle + 1e-6);
  }
}

TEST(RunGbdTest, BoundsAreMonotoneOnTwentySeeds) {
  GbdConfig config;
  config.epsilon = 5e-3;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario s = testing::Tiny(2 + seed % 2, 2 + seed % 3, 3 + seed % 2, seed);
    const GbdResult r = RunGbd(s, ObjectiveWeights{}, config);
    SCOPED_TRACE("seed " + std::to_string(seed));
    ExpectMonotoneTrace(r);
    if (r.status == GbdStatus::kEpsilonOptimal) {
      EXPECT_LE(r.upper_bound - r.lower_bound, config.epsilon);
    }
  }
}

TEST(RunGbdTest, IncumbentMeetsEveryConstraintButPossiblyRates) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = testing::Tiny(3, 3, 4, seed);
    const GbdResult r = RunGbd(s, ObjectiveWeights{}, GbdConfig{});
    ASSERT_TRUE(r.has_solution);
    for (const ConstraintMargin& m : CheckFeasibility(s, r.best_assignment)) {
      EXPECT_EQ(m.id, "rate") << "seed " << seed;
    }
    EXPECT_NEAR(r.objective_exact, Objective(s, r.best_assignment, ObjectiveWeights{}), 1e-12);
    // The rate bound underestimates the rate, so the exact delay is lower.
    EXPECT_LE(r.objective_exact, r.objective_surrogate * (1 + 1e-9));
  }
}

TEST(RunGbdTest, SingleFeasiblePointEndsAtOnce) {
  SbsSpec sbs;
  sbs.cache_capacity_bits = 0;
  Matrix gains(2, 1);
  gains << 1e-10, 3e-10;
  const Scenario s = testing::MakeScenario(gains, {{0.5, 0.5}, {0.9, 0.1}},
                                           {{1e6, 5e4}, {3e6, 8e4}}, {}, sbs);
  const GbdResult r = RunGbd(s, ObjectiveWeights{}, GbdConfig{});
  ASSERT_TRUE(r.has_solution);
  EXPECT_LE(r.iterations, 2);
  EXPECT_NEAR(r.upper_bound, r.lower_bound, 1e-6 * r.upper_bound);
}

TEST(RunGbdTest, NoFeasibleAssociationGivesNoSolution) {
  const Scenario s = testing::MakeScenario(Matrix::Constant(1, 2, 1e-22), {{1.0}}, {{1e6, 1e5}});
  const GbdResult r = RunGbd(s, ObjectiveWeights{}, GbdConfig{});
  EXPECT_FALSE(r.has_solution);
  EXPECT_EQ(r.status, GbdStatus::kNoSolution);
}

TEST(RunGbdTest, RejectsBadConfig) {
  const Scenario s = testing::Tiny(2, 2, 2, 1);
  GbdConfig c;
  c.epsilon = 0;
  EXPECT_THROW(RunGbd(s, ObjectiveWeights{}, c), std::invalid_argument);
  c.epsilon = 1e-3;
  c.max_iterations = 0;
  EXPECT_THROW(RunGbd(s, ObjectiveWeights{}, c), std::invalid_argument);
}

TEST(RunApufTest, CloseToPufAndMonotone) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Scenario s = testing::Tiny(2 + seed % 2, 3, 3, seed);
    const GbdResult puf = RunGbd(s, ObjectiveWeights{}, GbdConfig{});
    const GbdResult apuf = RunApuf(s, ObjectiveWeights{}, GbdConfig{});
    ASSERT_TRUE(puf.has_solution && apuf.has_solution) << "seed " << seed;
    EXPECT_LE(std::abs(apuf.objective_surrogate - puf.objective_surrogate),
              0.02 * puf.objective_surrogate)
        << "seed " << seed;
    SCOPED_TRACE("seed " + std::to_string(seed));
    ExpectMonotoneTrace(apuf);
  }
}

TEST(RunApufTest, SameSeedSameTrajectory) {
  const Scenario s = testing::Tiny(3, 3, 3, 4);
  const GbdResult a = RunApuf(s, ObjectiveWeights{}, GbdConfig{});
  const GbdResult b = RunApuf(s, ObjectiveWeights{}, GbdConfig{});
  std::ostringstream ta, tb;
  WriteTraceCsv(ta, a.trace);
  WriteTraceCsv(tb, b.trace);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(a.best_assignment.association, b.best_assignment.association);
}

TEST(InitialAssociationTest, StrongestGain) {
  Matrix gains(1, 3);
  gains << 0.1, 0.9, 0.3;
  const Scenario s = testing::MakeScenario(gains, {{1.0}}, {{1e6, 1e5}});
  EXPECT_EQ(InitialAssociation(s, InitialStrategy::kStrongestGain), testing::OneHot({1}, 3));
}

TEST(InitialAssociationTest, TiesGoToTheLowestIndex) {
  Matrix gains(1, 2);
  gains << 0.5, 0.5;
  const Scenario s = testing::MakeScenario(gains, {{1.0}}, {{1e6, 1e5}});
  EXPECT_EQ(InitialAssociation(s, InitialStrategy::kStrongestGain), testing::OneHot({0}, 2));
}

TEST(InitialAssociationTest, RandomIsSeededAndOneHot) {
  const Scenario s = testing::Tiny(4, 6, 3, 2);
  const BinaryMatrix a = InitialAssociation(s, InitialStrategy::kRandom, 9);
  EXPECT_EQ(a, InitialAssociation(s, InitialStrategy::kRandom, 9));
  for (int i = 0; i < 6; ++i) EXPECT_EQ(a.row(i).sum(), 1);
}

TEST(WriteTraceCsvTest, HeaderAndRows) {
  const Scenario s = testing::Tiny(2, 2, 3, 1);
  const GbdResult r = RunGbd(s, ObjectiveWeights{}, GbdConfig{});
  std::ostringstream out;
  WriteTraceCsv(out, r.trace);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,ub,lb,primal_status,cut_kind,master_obj,wall_ms");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0");
  }
  EXPECT_EQ(rows, static_cast<int>(r.trace.size()));
}

}  // namespace
}  // namespace jdpo
