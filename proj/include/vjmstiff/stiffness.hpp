#pragma once

#include "vjmstiff/chain.hpp"
#include "vjmstiff/equilibrium.hpp"

#include <vector>

namespace vjm {

/// 6x6 Cartesian stiffness at an equilibrium, with diagnostics.
///
/// `stiffness` maps end-effector twist increments to wrench increments. It is
/// symmetrized after extraction; `asymmetry` records the relative asymmetry
/// that was removed (values beyond ~1e-8 indicate an upstream defect).
/// `spring_block_min_eig` is the smallest eigenvalue of K_theta - H_thth^F,
/// whose zero crossing marks elastic buckling; `critical` is set when that
/// matrix is singular or indefinite. `singular` is set when the block matrix
/// could not be inverted exactly and a pseudo-inverse was used, which leaves
/// zero-stiffness directions in place of an error.
struct StiffnessResult {
  Matrix6 stiffness = Matrix6::Zero();
  bool loaded = false;
  bool critical = false;
  bool singular = false;
  double spring_block_min_eig = 0.0;
  double asymmetry = 0.0;
  Vector6 eigenvalues = Vector6::Zero();  // of the symmetrized stiffness
  Pose pose;                              // end-effector pose of evaluation
  std::string note;
};

/// Loaded-mode Cartesian stiffness at a solved equilibrium: assembles the
/// bordered matrix of the linearized equilibrium conditions with
/// k_th^F = (K_theta - H_thth^F)^-1, inverts it and extracts the upper-left
/// 6x6 block.
StiffnessResult stiffness_loaded(const ChainModel& chain,
                                 const EquilibriumState& state,
                                 double hessian_step = 1e-6);

/// Unloaded-mode stiffness (F = 0, theta = 0) at a passive configuration.
StiffnessResult stiffness_unloaded(const ChainModel& chain, const VectorX& q0);

/// Sum of per-chain stiffness results expressed at a common end-effector
/// frame. Poses must agree within `pose_tol` (m / rad); throws otherwise.
StiffnessResult aggregate_parallel(const std::vector<StiffnessResult>& results,
                                   double pose_tol = 1e-9);

/// Directional tangent stiffness d^T K d along a unit 6-direction.
double directional_stiffness(const StiffnessResult& result, const Vector6& direction);

}  // namespace vjm
