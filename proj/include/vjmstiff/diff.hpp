#pragma once

#include "vjmstiff/chain.hpp"

namespace vjm {

/// Screw Jacobians of the chain pose. Columns are world-frame twists per unit
/// coordinate: translational part in m, rotational part in rad.
struct JacobianPair {
  MatrixX theta;  // 6 x m
  MatrixX q;      // 6 x n
};

/// Second derivatives of the wrench-weighted pose F^T g(q, theta), split into
/// the blocks used by the loaded stiffness model. All blocks are symmetric
/// parts of the exact second derivative and vanish identically for F = 0.
struct HessianSet {
  MatrixX qq;          // n x n
  MatrixX qtheta;      // n x m
  MatrixX thetatheta;  // m x m
};

JacobianPair jacobians(const ChainModel& chain, const VectorX& q,
                       const VectorX& theta);

/// Semi-analytic Hessians: central finite differences of the analytic
/// Jacobian columns contracted with the wrench, symmetrized. `step` is the
/// absolute coordinate step, shared by translational and rotational
/// coordinates (all coordinates are O(1) or smaller in this problem class).
HessianSet hessians(const ChainModel& chain, const VectorX& q,
                    const VectorX& theta, const Vector6& wrench,
                    double step = 1e-6);

/// Maximum relative deviations of the analytic Jacobians and Hessians from
/// central finite differences of the kinematic model itself.
struct FdReport {
  double jacobian_q = 0.0;
  double jacobian_theta = 0.0;
  double hessian_qq = 0.0;
  double hessian_qtheta = 0.0;
  double hessian_thetatheta = 0.0;
  double max() const;
};

FdReport fd_validate(const ChainModel& chain, const VectorX& q,
                     const VectorX& theta, const Vector6& wrench, double step);

}  // namespace vjm
