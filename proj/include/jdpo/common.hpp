#pragma once

#include <Eigen/Dense>

namespace jdpo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BinaryMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Transmit power assigned to pairs that are switched off. Keeps log-powers
// finite.
inline constexpr double kPowerFloorW = 1e-12;

inline constexpr double kLn2 = 0.693147180559945309417;

// Margin below which a constraint counts as violated, in constraint units.
inline constexpr double kFeasibilityTol = 1e-9;

}  // namespace jdpo
