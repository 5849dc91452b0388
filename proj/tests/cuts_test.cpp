#include "jdpo/cuts.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "test_util.hpp"

namespace jdpo {
namespace {

double Tol(double v) { return 1e-6 * (1.0 + std::abs(v)); }

TEST(OptimalityCutTest, TightAtTheSolvedAssociation) {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Scenario s = testing::Tiny(2, 3, 3, seed);
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    for (const BinaryMatrix& x : testing::AllAssociations(3, 2)) {
      const PrimalOutcome out = SolvePrimal(s, params, x, ObjectiveWeights{});
      if (!out.optimal()) continue;
      ++checked;
      const Cut cut = MakeOptimalityCut(s, params, ObjectiveWeights{}, *out.solution);
      EXPECT_EQ(cut.kind, CutKind::kOptimality);
      EXPECT_NEAR(cut.Evaluate(x), out.solution->objective, Tol(out.solution->objective));
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(OptimalityCutTest, NeverAboveAnyFeasibleOptimum) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Scenario s = testing::Tiny(2, 2, 3, seed);
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    const std::vector<BinaryMatrix> all = testing::AllAssociations(2, 2);
    for (const BinaryMatrix& used : all) {
      const PrimalOutcome out = SolvePrimal(s, params, used, ObjectiveWeights{});
      if (!out.optimal()) continue;
      const Cut cut = MakeOptimalityCut(s, params, ObjectiveWeights{}, *out.solution);
      for (const BinaryMatrix& x : all) {
        const PrimalOutcome other = SolvePrimal(s, params, x, ObjectiveWeights{});
        if (!other.optimal()) continue;
        EXPECT_LE(cut.Evaluate(x), other.solution->objective + Tol(other.solution->objective))
            << "seed " << seed;
      }
    }
  }
}

TEST(FeasibilityCutTest, SeparatesTheViolatingAssociation) {
  int violated = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario s = testing::Tiny(3, 3, 3, seed);
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    const std::vector<BinaryMatrix> all = testing::AllAssociations(3, 3);
    for (const BinaryMatrix& used : all) {
      const FeasibilityCertificate cert = SolveFeasibility(s, params, used);
      if (cert.status != FeasibilityStatus::kViolated) continue;
      ++violated;
      const Cut cut = MakeFeasibilityCut(s, params, cert);
      EXPECT_EQ(cut.kind, CutKind::kFeasibility);
      EXPECT_GT(cut.Evaluate(used), 0.0);
      for (const BinaryMatrix& x : all) {
        if (!SolvePrimal(s, params, x, ObjectiveWeights{}).optimal()) continue;
        EXPECT_LE(cut.Evaluate(x), 1e-9) << "seed " << seed;
      }
    }
  }
  EXPECT_GT(violated, 0);
}

TEST(NoGoodCutTest, ExcludesOnlyTheUsedAssociation) {
  const std::vector<BinaryMatrix> all = testing::AllAssociations(3, 3);
  const BinaryMatrix used = testing::OneHot({2, 0, 1}, 3);
  const Cut cut = MakeNoGoodCut(used);
  EXPECT_EQ(cut.kind, CutKind::kNoGood);
  int excluded = 0;
  for (const BinaryMatrix& x : all) {
    if (cut.Evaluate(x) > 0) {
      ++excluded;
      EXPECT_EQ(x, used);
    }
  }
  EXPECT_EQ(excluded, 1);
}

TEST(AdmissiblePairsTest, MatchesTheMaximumReachableRate) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = testing::Tiny(3, 4, 4, seed);
    const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
    const BinaryMatrix mask = AdmissiblePairs(s, params);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 3; ++j) {
        EXPECT_EQ(mask(i, j) == 1, MaxApproxRate(s, params, i, j) > s.rate_requirement(i));
      }
    }
  }
}

TEST(AdmissiblePairsTest, OutOfRangePairIsDropped) {
  Matrix gains(1, 2);
  gains << 1e-10, 1e-22;
  const Scenario s = testing::MakeScenario(gains, {{1.0}}, {{1e6, 1e5}});
  const ApproxParams params = FitParams(s, DefaultAnchorPowers(s));
  const BinaryMatrix mask = AdmissiblePairs(s, params);
  EXPECT_EQ(mask(0, 0), 1);
  EXPECT_EQ(mask(0, 1), 0);
}

TEST(WriteCutsCsvTest, OneRowPerCut) {
  const Cut a = MakeNoGoodCut(testing::OneHot({0, 1}, 2));
  Cut b = a;
  b.iteration = 3;
  std::ostringstream out;
  WriteCutsCsv(out, {a, b});
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    int commas = 0;
    for (char c : line) commas += c == ',';
    EXPECT_EQ(commas, 2 + 4) << line;
    EXPECT_EQ(line.rfind(CutKindName(CutKind::kNoGood), 0), 0u) << line;
  }
  EXPECT_EQ(rows, 2);
}

}  // namespace
}  // namespace jdpo
