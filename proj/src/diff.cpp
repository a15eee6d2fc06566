#include "vjmstiff/diff.hpp"

#include <limits>
#include <stdexcept>

namespace vjm {

namespace {

enum class CoordKind { Q, Theta };

// One multiplicative factor of the chain transform that carries a coordinate.
struct CoordFactor {
  Axis axis;
  CoordKind kind;
  int index;
  Eigen::Matrix3d rotation_before;  // rotation of the prefix product
  Eigen::Vector3d origin_before;    // position of the prefix product
};

// Walks the chain once, recording the prefix frame at every coordinate-bearing
// elementary factor. Spring6 elements expand into their six factors in the
// Tx Ty Tz Rx Ry Rz order.
struct FactorWalk {
  std::vector<CoordFactor> factors;
  Eigen::Vector3d end_position;
};

FactorWalk walk_factors(const ChainModel& chain, const VectorX& q,
                        const VectorX& theta) {
  FactorWalk walk;
  walk.factors.reserve(chain.spring_count + chain.passive_count);
  Transform prefix = Transform::Identity();
  auto push = [&](Axis axis, CoordKind kind, int index, double value) {
    walk.factors.push_back({axis, kind, index,
                            prefix.block<3, 3>(0, 0),
                            prefix.block<3, 1>(0, 3)});
    prefix = prefix * elementary(axis, value);
  };
  static constexpr Axis spring_order[6] = {Axis::Tx, Axis::Ty, Axis::Tz,
                                           Axis::Rx, Axis::Ry, Axis::Rz};
  for (const ChainElement& e : chain.elements) {
    switch (e.kind) {
      case ElementKind::Rigid:
        prefix = prefix * e.fixed_transform;
        break;
      case ElementKind::Actuated:
        prefix = prefix * elementary(e.axis, e.value);
        break;
      case ElementKind::Passive:
        push(e.axis, CoordKind::Q, e.q_index, q[e.q_index]);
        break;
      case ElementKind::Spring1:
        push(e.axis, CoordKind::Theta, e.theta_index, theta[e.theta_index]);
        break;
      case ElementKind::Spring6:
        for (int k = 0; k < 6; ++k)
          push(spring_order[k], CoordKind::Theta, e.theta_index + k,
               theta[e.theta_index + k]);
        break;
    }
  }
  walk.end_position = prefix.block<3, 1>(0, 3);
  return walk;
}

}  // namespace

JacobianPair jacobians(const ChainModel& chain, const VectorX& q,
                       const VectorX& theta) {
  check_dimensions(chain, q, theta);
  const FactorWalk walk = walk_factors(chain, q, theta);

  JacobianPair jac;
  jac.theta = MatrixX::Zero(6, chain.spring_count);
  jac.q = MatrixX::Zero(6, chain.passive_count);
  for (const CoordFactor& f : walk.factors) {
    const Eigen::Vector3d axis_world = f.rotation_before * axis_direction(f.axis);
    Vector6 column;
    if (is_rotational(f.axis)) {
      column.head<3>() = axis_world.cross(walk.end_position - f.origin_before);
      column.tail<3>() = axis_world;
    } else {
      column.head<3>() = axis_world;
      column.tail<3>().setZero();
    }
    if (f.kind == CoordKind::Q)
      jac.q.col(f.index) = column;
    else
      jac.theta.col(f.index) = column;
  }
  return jac;
}

HessianSet hessians(const ChainModel& chain, const VectorX& q,
                    const VectorX& theta, const Vector6& wrench, double step) {
  check_dimensions(chain, q, theta);
  const int n = chain.passive_count;
  const int m = chain.spring_count;
  HessianSet h;
  h.qq = MatrixX::Zero(n, n);
  h.qtheta = MatrixX::Zero(n, m);
  h.thetatheta = MatrixX::Zero(m, m);
  if (wrench.isZero()) return h;

  // Row i of the combined Hessian is the central difference, along
  // coordinate i, of the generalized force vector F^T [J_q J_theta].
  MatrixX full = MatrixX::Zero(n + m, n + m);
  VectorX qp = q, tp = theta;
  auto torque_row = [&](const JacobianPair& jac) {
    Eigen::RowVectorXd row(n + m);
    row.head(n) = wrench.transpose() * jac.q;
    row.tail(m) = wrench.transpose() * jac.theta;
    return row;
  };
  for (int i = 0; i < n + m; ++i) {
    double& coord = i < n ? qp[i] : tp[i - n];
    const double saved = coord;
    coord = saved + step;
    const Eigen::RowVectorXd plus = torque_row(jacobians(chain, qp, tp));
    coord = saved - step;
    const Eigen::RowVectorXd minus = torque_row(jacobians(chain, qp, tp));
    coord = saved;
    full.row(i) = (plus - minus) / (2.0 * step);
  }
  full = 0.5 * (full + full.transpose()).eval();

  h.qq = full.topLeftCorner(n, n);
  h.qtheta = full.topRightCorner(n, m);
  h.thetatheta = full.bottomRightCorner(m, m);
  return h;
}

double FdReport::max() const {
  return std::max({jacobian_q, jacobian_theta, hessian_qq, hessian_qtheta,
                   hessian_thetatheta});
}

namespace {

// Relative deviation with a noise floor: blocks whose analytic and reference
// values both sit below the finite-difference noise level count as agreeing
// (an identically zero Hessian compared against pure rounding noise is a
// match, not a 100% error).
double block_deviation(const MatrixX& analytic, const MatrixX& reference,
                       double noise_floor) {
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(reference.cwiseAbs().maxCoeff(),
                                analytic.cwiseAbs().maxCoeff());
  if (scale <= noise_floor) return 0.0;
  return (analytic - reference).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

FdReport fd_validate(const ChainModel& chain, const VectorX& q,
                     const VectorX& theta, const Vector6& wrench, double step) {
  if (!(step >= 1e-9 && step <= 1e-3))
    throw std::invalid_argument("fd_validate: step outside [1e-9, 1e-3]");
  check_dimensions(chain, q, theta);
  const int n = chain.passive_count;
  const int m = chain.spring_count;

  const Pose base = forward_kinematics(chain, q, theta);
  VectorX qp = q, tp = theta;
  auto coord = [&](int i) -> double& { return i < n ? qp[i] : tp[i - n]; };
  auto fk = [&]() { return forward_kinematics(chain, qp, tp); };

  // Central-difference Jacobian of the pose twist.
  MatrixX jq_fd = MatrixX::Zero(6, n);
  MatrixX jtheta_fd = MatrixX::Zero(6, m);
  for (int i = 0; i < n + m; ++i) {
    const double saved = coord(i);
    coord(i) = saved + step;
    const Pose plus = fk();
    coord(i) = saved - step;
    const Pose minus = fk();
    coord(i) = saved;
    const Vector6 column = pose_diff(plus, minus) / (2.0 * step);
    if (i < n)
      jq_fd.col(i) = column;
    else
      jtheta_fd.col(i - n) = column;
  }

  const JacobianPair jac = jacobians(chain, q, theta);
  const double pose_scale = 1.0 + base.position.cwiseAbs().maxCoeff();
  const double jac_noise =
      50.0 * std::numeric_limits<double>::epsilon() * pose_scale / step;
  FdReport report;
  report.jacobian_q = block_deviation(jac.q, jq_fd, jac_noise);
  report.jacobian_theta = block_deviation(jac.theta, jtheta_fd, jac_noise);

  // Central second differences of the scalar F^T pose_diff(g(x), g(x0)).
  // Second differences divide by h^2, so the step is floored at 1e-4 to keep
  // the roundoff floor (eps/h^2) below the truncation error.
  const double hstep = std::max(step, 1e-4);
  double scalar_scale = 0.0;
  auto scalar = [&]() {
    const double s = wrench.dot(pose_diff(fk(), base));
    scalar_scale = std::max(scalar_scale, std::abs(s));
    return s;
  };
  MatrixX h_fd = MatrixX::Zero(n + m, n + m);
  if (!wrench.isZero()) {
    const double s0 = scalar();
    for (int i = 0; i < n + m; ++i) {
      for (int j = i; j < n + m; ++j) {
        const double si = coord(i), sj = coord(j);
        double value;
        if (i == j) {
          coord(i) = si + 2.0 * hstep;
          const double pp = scalar();
          coord(i) = si - 2.0 * hstep;
          const double mm = scalar();
          coord(i) = si;
          value = (pp - 2.0 * s0 + mm) / (4.0 * hstep * hstep);
        } else {
          coord(i) = si + hstep; coord(j) = sj + hstep;
          const double pp = scalar();
          coord(j) = sj - hstep;
          const double pm = scalar();
          coord(i) = si - hstep; coord(j) = sj + hstep;
          const double mp = scalar();
          coord(j) = sj - hstep;
          const double mm = scalar();
          coord(i) = si; coord(j) = sj;
          value = (pp - pm - mp + mm) / (4.0 * hstep * hstep);
        }
        h_fd(i, j) = value;
        h_fd(j, i) = value;
      }
    }
  }

  const HessianSet h = hessians(chain, q, theta, wrench);
  const double hess_noise = 50.0 * std::numeric_limits<double>::epsilon() *
                            std::max(scalar_scale, 1e-6) / (hstep * hstep);
  report.hessian_qq = block_deviation(h.qq, h_fd.topLeftCorner(n, n), hess_noise);
  report.hessian_qtheta =
      block_deviation(h.qtheta, h_fd.topRightCorner(n, m), hess_noise);
  report.hessian_thetatheta =
      block_deviation(h.thetatheta, h_fd.bottomRightCorner(m, m), hess_noise);
  return report;
}

}  // namespace vjm
