#pragma once

#include <iosfwd>
#include <vector>

#include "jdpo/common.hpp"
#include "jdpo/convex_approx.hpp"
#include "jdpo/exact_model.hpp"
#include "jdpo/primal_solver.hpp"
#include "jdpo/scenario.hpp"

namespace jdpo {

enum class CutKind { kOptimality, kFeasibility, kNoGood };

const char* CutKindName(CutKind kind);

// Affine function of the association, const_term + sum x_coeffs_ij x_ij.
// Optimality cuts read phi >= value. Feasibility and no-good cuts read
// 0 >= value.
struct Cut {
  CutKind kind = CutKind::kOptimality;
  double const_term = 0;
  Matrix x_coeffs;
  int iteration = 0;
  // Power-cap multipliers the cut was built from.
  Matrix source;

  double Evaluate(const BinaryMatrix& x) const;
};

// Pairs that can meet their user's rate requirement at all: own power at P_j,
// every other pair at the floor. Pairs outside the mask cannot appear in a
// feasible association.
BinaryMatrix AdmissiblePairs(const Scenario& scenario, const ApproxParams& params);

// Lower bound on the optimal power-allocation value for every association,
// exact at the association the primal was solved for.
Cut MakeOptimalityCut(const Scenario& scenario, const ApproxParams& params,
                      const ObjectiveWeights& weights, const PrimalSolution& primal);

// Positive at the certificate's association and nonpositive at every
// association whose power-allocation problem is feasible.
Cut MakeFeasibilityCut(const Scenario& scenario, const ApproxParams& params,
                       const FeasibilityCertificate& cert);

// Excludes exactly x_used.
Cut MakeNoGoodCut(const BinaryMatrix& x_used);

// One row per cut: kind,iteration,const,then U*B coefficients row-major.
void WriteCutsCsv(std::ostream& out, const std::vector<Cut>& cuts);

}  // namespace jdpo
