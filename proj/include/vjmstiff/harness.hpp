#pragma once

#include "vjmstiff/chain.hpp"
#include "vjmstiff/equilibrium.hpp"
#include "vjmstiff/stiffness.hpp"

#include <string>
#include <vector>

namespace vjm {

/// One point of a force-displacement sweep.
struct SweepSample {
  double delta = 0.0;     // displacement along the sweep direction, m
  double force = 0.0;     // wrench component along the direction, N
  double tangent = 0.0;   // d^T K^F d, N/m
  int iterations = 0;
  int restarts = 0;
  bool critical = false;  // loaded spring block singular at this sample
  bool singular = false;
  double spring_block_min_eig = 0.0;
  double stability_margin = 0.0;  // constrained second-variation minimum
  EquilibriumState state;
};

struct SweepCurve {
  Vector6 direction = Vector6::Zero();
  double step = 0.0;
  std::vector<SweepSample> samples;
  bool truncated = false;   // solver failed before reaching delta_max
  std::string failure;
};

/// Displacement-driven continuation: solves the equilibrium at
/// start_pose (+) delta * direction for delta = 0, step, ..., delta_max,
/// warm-starting each solve from the previous state, and records the force
/// and tangent stiffness along the direction. On a solver failure the curve
/// is truncated at that delta with the failure recorded.
SweepCurve displacement_sweep(const ChainModel& chain, const Pose& start_pose,
                              const Vector6& direction, double delta_max,
                              double step, const VectorX& q_start,
                              const SolverSettings& settings = {});

/// Table-style buckling metrics extracted from a sweep.
///
/// k0: unloaded tangent; k1: tangent just before the critical point;
/// f_cr/delta_cr: critical force and displacement (interpolated from the
/// zero crossing of the spring-block eigenvalue when possible); k2: tangent
/// just after; k3/f1/delta1: tangent and force at the "large deformation"
/// point delta1 = min(2 delta_cr, delta_max).
struct BucklingReport {
  bool detected = false;
  double k0 = 0.0;
  double k1 = 0.0;
  double f_cr = 0.0;
  double delta_cr = 0.0;
  double k2 = 0.0;
  double f1 = 0.0;
  double delta1 = 0.0;
  double k3 = 0.0;
  int critical_index = -1;   // first post-drop sample
  int eigenvalue_index = -1; // sample nearest the eigenvalue crossing
};

/// Locates the first tangent-stiffness collapse (tangent below the running
/// maximum divided by drop_factor) and confirms it against an eigenvalue
/// crossing; the eigenvalue test is authoritative. Two signals are watched:
/// the smallest eigenvalue of K_theta - H_thth^F (modes carried by the
/// springs) and the constrained stability margin (modes carried by passive
/// joints). Absence of buckling is a valid (detected = false) report.
BucklingReport detect_buckling(const SweepCurve& curve, double drop_factor = 5.0);

/// Planar test column: an inverted pendulum on a rotational spring, with a
/// compliant axial drive, free lateral translation and free rotation at the
/// tip (released through passive joints). Buckles at F = rotational_k / length
/// under axial compression. The out-of-plane spring directions get
/// `auxiliary_k` so the stiffness model stays invertible.
ChainModel pendulum_column(double axial_k, double rotational_k, double length,
                           double auxiliary_k = 1e9);

/// Lumped cantilever column: `segments` rigid links of length/segments, a
/// rotational spring of segments*EI/length at the base of each, compliant
/// axial drive, tip released laterally and rotationally. Critical load tends
/// to pi^2 EI / (4 L^2) as the discretization is refined.
ChainModel euler_column(int segments, double flexural_rigidity, double length,
                        double axial_k, double auxiliary_k = 1e9);

}  // namespace vjm
