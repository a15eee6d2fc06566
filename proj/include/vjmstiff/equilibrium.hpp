#pragma once

#include "vjmstiff/chain.hpp"
#include "vjmstiff/diff.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>

namespace vjm {

struct SolverSettings {
  double tol_pose = 1e-9;    // weighted pose-twist norm
  double tol_static = 1e-8;  // relative static-balance deficit
  int max_iter = 100;        // per attempt
  double restart_noise = 1e-4;  // doubled on each successive restart
  int max_restarts = 10;
  std::uint64_t rng_seed = 0;
  double characteristic_length = 1.0;  // weights rad against m in pose norms
  bool check_stability = true;  // reject equilibria whose constrained second
                                // variation is indefinite, restarting instead
  double hessian_step = 1e-6;
};

/// Converged (or best-effort) loaded configuration for a prescribed pose.
struct EquilibriumState {
  VectorX q;
  VectorX theta;
  Vector6 wrench = Vector6::Zero();  // (force N, torque N*m) on the end-effector
  Pose pose;                         // pose actually attained
  Pose target;
  int iterations = 0;          // total scheme iterations across restarts
  int iterations_to_pose = 0;  // iterations until the pose residual first
                               // passed tolerance on the returned attempt
  int restarts = 0;
  double residual_pose = 0.0;
  double residual_static = 0.0;
  bool converged = false;
  bool stable = true;
  // Smallest eigenvalue of the constrained second variation; negative at
  // unstable equilibria, crosses zero at buckling. NaN when not evaluated.
  double stability_margin = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

/// Pose and static-balance residuals of a candidate state. The static
/// residual is the larger relative deficit of the two equilibrium conditions
/// J_theta^T F = K_theta theta and J_q^T F = 0.
std::pair<double, double> residuals(const ChainModel& chain, const Pose& target,
                                    const VectorX& q, const VectorX& theta,
                                    const Vector6& wrench,
                                    double characteristic_length = 1.0);

/// Adds i.i.d. uniform noise in [-noise, +noise] to every coordinate.
/// Deterministic for a fixed generator state.
std::pair<VectorX, VectorX> perturb_restart(const VectorX& q,
                                            const VectorX& theta, double noise,
                                            std::mt19937_64& rng);

/// Smallest eigenvalue of the second variation of the potential (spring
/// energy minus external work) projected onto the prescribed-pose constraint
/// manifold. Positive at stable equilibria; +infinity when the chain has no
/// internal motion at fixed pose.
double stability_margin(const ChainModel& chain, const VectorX& q,
                        const VectorX& theta, const Vector6& wrench,
                        double hessian_step = 1e-6);

/// True when the constrained second variation of the potential (springs minus
/// external work) is positive semidefinite on the prescribed-pose manifold.
bool equilibrium_stable(const ChainModel& chain, const VectorX& q,
                        const VectorX& theta, const Vector6& wrench,
                        double hessian_step = 1e-6);

/// Iterative displacement-driven equilibrium solve.
///
/// Each iteration linearizes the kinematics at the current state and solves
/// the saddle system
///   [ J_th K_th^-1 J_th^T   J_q ] [ F  ]   [ pose_diff(target, g) + J_th th ]
///   [ J_q^T                  0  ] [ dq ] = [ 0                              ]
/// followed by the closed-form spring update th = K_th^-1 J_th^T F. The
/// system is solved in the minimum-norm least-squares sense so chains whose
/// springs do not span all six directions remain usable; targets with
/// components outside the attainable set simply fail to converge.
///
/// Stalled iterations and converged-but-unstable equilibria trigger seeded
/// random restarts with escalating noise. Non-convergence is reported through
/// `converged`/`message`, carrying the best iterate found.
EquilibriumState solve_equilibrium(const ChainModel& chain, const Pose& target,
                                   const VectorX& q_start,
                                   const VectorX& theta_start,
                                   const SolverSettings& settings = {});

}  // namespace vjm
