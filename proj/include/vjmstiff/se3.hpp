#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vjm {

/// Axes of the elementary homogeneous transforms. Tx/Ty/Tz translate,
/// Rx/Ry/Rz rotate about the corresponding local axis.
enum class Axis { Tx, Ty, Tz, Rx, Ry, Rz };

inline constexpr bool is_rotational(Axis a) {
  return a == Axis::Rx || a == Axis::Ry || a == Axis::Rz;
}

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::Tx: return "Tx";
    case Axis::Ty: return "Ty";
    case Axis::Tz: return "Tz";
    case Axis::Rx: return "Rx";
    case Axis::Ry: return "Ry";
    case Axis::Rz: return "Rz";
  }
  return "?";
}

template <typename Scalar>
using Transform4 = Eigen::Matrix<Scalar, 4, 4>;

template <typename Scalar>
using Vector6T = Eigen::Matrix<Scalar, 6, 1>;

using Transform = Transform4<double>;
using Vector6 = Vector6T<double>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// Position plus orientation of a frame, extracted from a homogeneous matrix.
template <typename Scalar>
struct PoseT {
  Eigen::Matrix<Scalar, 3, 1> position;
  Eigen::Matrix<Scalar, 3, 3> orientation;
};

using Pose = PoseT<double>;

/// Unit direction of an axis in its local frame.
template <typename Scalar = double>
Eigen::Matrix<Scalar, 3, 1> axis_direction(Axis a) {
  Eigen::Matrix<Scalar, 3, 1> u = Eigen::Matrix<Scalar, 3, 1>::Zero();
  switch (a) {
    case Axis::Tx: case Axis::Rx: u[0] = Scalar(1); break;
    case Axis::Ty: case Axis::Ry: u[1] = Scalar(1); break;
    case Axis::Tz: case Axis::Rz: u[2] = Scalar(1); break;
  }
  return u;
}

/// Elementary homogeneous transform about one axis.
template <typename Scalar>
Transform4<Scalar> elementary(Axis axis, Scalar value) {
  if (!std::isfinite(static_cast<double>(value)))
    throw std::invalid_argument("elementary transform: non-finite value");
  Transform4<Scalar> t = Transform4<Scalar>::Identity();
  const Scalar c = std::cos(value);
  const Scalar s = std::sin(value);
  switch (axis) {
    case Axis::Tx: t(0, 3) = value; break;
    case Axis::Ty: t(1, 3) = value; break;
    case Axis::Tz: t(2, 3) = value; break;
    case Axis::Rx:
      t(1, 1) = c; t(1, 2) = -s;
      t(2, 1) = s; t(2, 2) = c;
      break;
    case Axis::Ry:
      t(0, 0) = c;  t(0, 2) = s;
      t(2, 0) = -s; t(2, 2) = c;
      break;
    case Axis::Rz:
      t(0, 0) = c; t(0, 1) = -s;
      t(1, 0) = s; t(1, 1) = c;
      break;
  }
  return t;
}

inline Transform elementary(Axis axis, double value) {
  return elementary<double>(axis, value);
}

/// Six-coordinate virtual-spring transform
/// Tx(v0)*Ty(v1)*Tz(v2)*Rx(v3)*Ry(v4)*Rz(v5), in exactly that order.
template <typename Scalar>
Transform4<Scalar> spring_transform(const Vector6T<Scalar>& v) {
  Transform4<Scalar> t = elementary<Scalar>(Axis::Tx, v[0]);
  t = t * elementary<Scalar>(Axis::Ty, v[1]);
  t = t * elementary<Scalar>(Axis::Tz, v[2]);
  t = t * elementary<Scalar>(Axis::Rx, v[3]);
  t = t * elementary<Scalar>(Axis::Ry, v[4]);
  t = t * elementary<Scalar>(Axis::Rz, v[5]);
  return t;
}

inline Transform spring_transform(const Vector6& v) {
  return spring_transform<double>(v);
}

template <typename Scalar>
PoseT<Scalar> pose_of(const Transform4<Scalar>& t) {
  PoseT<Scalar> p;
  p.position = t.template block<3, 1>(0, 3);
  p.orientation = t.template block<3, 3>(0, 0);
  return p;
}

inline Pose pose_of(const Transform& t) { return pose_of<double>(t); }

template <typename Scalar>
Transform4<Scalar> transform_of(const PoseT<Scalar>& p) {
  Transform4<Scalar> t = Transform4<Scalar>::Identity();
  t.template block<3, 3>(0, 0) = p.orientation;
  t.template block<3, 1>(0, 3) = p.position;
  return t;
}

/// Axis-angle vector of a rotation matrix (small-angle safe extraction).
/// Throws for relative angles at or near pi, where the skew-part extraction
/// degenerates and the twist parameterization is no longer usable.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rotation_log(const Eigen::Matrix<Scalar, 3, 3>& r) {
  const Scalar cos_angle =
      std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Scalar angle = std::acos(cos_angle);
  if (angle >= std::numbers::pi_v<Scalar> - Scalar(1e-4))
    throw std::domain_error("rotation too large for twist differencing");
  Eigen::Matrix<Scalar, 3, 1> skew;
  skew << r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1);
  if (angle < Scalar(1e-9)) return Scalar(0.5) * skew;
  return (angle / (Scalar(2) * std::sin(angle))) * skew;
}

/// Twist from pose `from` to pose `to`: translation difference stacked over
/// the axis-angle vector of the relative rotation to.orientation*from^T.
template <typename Scalar>
Vector6T<Scalar> pose_diff(const PoseT<Scalar>& to, const PoseT<Scalar>& from) {
  Vector6T<Scalar> d;
  d.template head<3>() = to.position - from.position;
  const Eigen::Matrix<Scalar, 3, 3> rel =
      to.orientation * from.orientation.transpose();
  d.template tail<3>() = rotation_log<Scalar>(rel);
  return d;
}

inline Vector6 pose_diff(const Pose& to, const Pose& from) {
  return pose_diff<double>(to, from);
}

/// Applies a small twist to a pose: translation added in the world frame,
/// rotation applied as a world-frame axis-angle increment. Inverse of
/// pose_diff for small twists: pose_diff(apply_twist(p, d), p) == d.
template <typename Scalar>
PoseT<Scalar> apply_twist(const PoseT<Scalar>& p, const Vector6T<Scalar>& twist) {
  PoseT<Scalar> out;
  out.position = p.position + twist.template head<3>();
  const Eigen::Matrix<Scalar, 3, 1> phi = twist.template tail<3>();
  const Scalar angle = phi.norm();
  Eigen::Matrix<Scalar, 3, 3> rot = Eigen::Matrix<Scalar, 3, 3>::Identity();
  if (angle > Scalar(0)) {
    rot = Eigen::AngleAxis<Scalar>(angle, phi / angle).toRotationMatrix();
  }
  out.orientation = rot * p.orientation;
  return out;
}

inline Pose apply_twist(const Pose& p, const Vector6& twist) {
  return apply_twist<double>(p, twist);
}

/// Orthonormality / structure check used when accepting raw matrices.
template <typename Scalar>
bool is_valid_transform(const Transform4<Scalar>& t, Scalar tol = Scalar(1e-9)) {
  const Eigen::Matrix<Scalar, 3, 3> r = t.template block<3, 3>(0, 0);
  const Scalar ortho =
      (r * r.transpose() - Eigen::Matrix<Scalar, 3, 3>::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (ortho > tol) return false;
  if (std::abs(r.determinant() - Scalar(1)) > tol) return false;
  if (t(3, 0) != Scalar(0) || t(3, 1) != Scalar(0) || t(3, 2) != Scalar(0) ||
      t(3, 3) != Scalar(1))
    return false;
  return t.allFinite();
}

/// Nearest rotation matrix (polar factor). Used once, on construction from
/// raw data; compositions are never silently re-orthonormalized.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> orthonormalized(const Eigen::Matrix<Scalar, 3, 3>& r) {
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, 3, 3>> svd(
      r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix<Scalar, 3, 3> u = svd.matrixU();
  Eigen::Matrix<Scalar, 3, 3> v = svd.matrixV();
  if ((u * v.transpose()).determinant() < Scalar(0)) u.col(2) = -u.col(2);
  return u * v.transpose();
}

}  // namespace vjm
