#pragma once

#include "vjmstiff/se3.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace vjm {

using VectorX = Eigen::VectorXd;
using MatrixX = Eigen::MatrixXd;

enum class ElementKind { Rigid, Passive, Actuated, Spring1, Spring6 };

const char* element_kind_name(ElementKind k);

/// One link of the element sequence describing a kinematic chain.
///
/// Which fields are meaningful depends on `kind`:
///   Rigid    - fixed_transform
///   Passive  - axis, q_index
///   Actuated - axis, value (the drive is locked at `value` for the analysis)
///   Spring1  - axis, theta_index, stiffness
///   Spring6  - theta_index (first of six consecutive), stiffness6
struct ChainElement {
  ElementKind kind = ElementKind::Rigid;
  std::string name;
  Transform fixed_transform = Transform::Identity();
  Axis axis = Axis::Tx;
  double value = 0.0;
  int q_index = -1;
  int theta_index = -1;
  double stiffness = 0.0;
  Matrix6 stiffness6 = Matrix6::Zero();
};

namespace el {
ChainElement rigid(const Transform& t, std::string name = {});
ChainElement rigid(Axis axis, double value, std::string name = {});
ChainElement passive(Axis axis, std::string name = {});
ChainElement actuated(Axis axis, double value, std::string name = {});
ChainElement spring(Axis axis, double stiffness, std::string name = {});
ChainElement spring(const Matrix6& stiffness, std::string name = {});
}  // namespace el

/// A manipulator chain as an ordered element sequence, with the aggregated
/// virtual-spring stiffness K_theta assembled block-diagonally in theta order.
struct ChainModel {
  std::string name;
  std::vector<ChainElement> elements;
  int passive_count = 0;  // n
  int spring_count = 0;   // m
  MatrixX spring_stiffness;  // K_theta, m x m
};

/// Builds a ChainModel from an element sequence: assigns any unset q/theta
/// indices sequentially, verifies the index cover invariants, assembles
/// K_theta and checks it is symmetric positive definite.
/// Throws std::invalid_argument naming the offending element otherwise.
ChainModel assemble_chain(std::string name, std::vector<ChainElement> elements);

/// 4x4 transform of one element at the given coordinates.
Transform element_transform(const ChainElement& e, const VectorX& q,
                            const VectorX& theta);

/// Product of all element transforms in order.
Transform chain_transform(const ChainModel& chain, const VectorX& q,
                          const VectorX& theta);

Pose forward_kinematics(const ChainModel& chain, const VectorX& q,
                        const VectorX& theta);

/// Aggregated virtual-joint reactions K_theta * theta.
VectorX spring_torques(const ChainModel& chain, const VectorX& theta);

/// Elastic energy 0.5 * theta^T K_theta theta stored in the springs.
double elastic_energy(const ChainModel& chain, const VectorX& theta);

/// Damped-least-squares inverse kinematics over the passive coordinates with
/// all springs relaxed (theta = 0). Converges when the pose error component
/// inside the span of the passive-joint Jacobian drops below `tol`.
/// Throws std::runtime_error("unreachable or singular target") otherwise.
VectorX inverse_kinematics_unloaded(const ChainModel& chain,
                                    const Pose& target, const VectorX& q_guess,
                                    double tol = 1e-9, int max_iter = 200);

void check_dimensions(const ChainModel& chain, const VectorX& q,
                      const VectorX& theta);

}  // namespace vjm
