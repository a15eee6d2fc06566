#include "vjmstiff/chain.hpp"

#include "vjmstiff/diff.hpp"

#include <Eigen/Eigenvalues>

#include <set>
#include <sstream>
#include <stdexcept>

namespace vjm {

const char* element_kind_name(ElementKind k) {
  switch (k) {
    case ElementKind::Rigid: return "rigid";
    case ElementKind::Passive: return "passive";
    case ElementKind::Actuated: return "actuated";
    case ElementKind::Spring1: return "spring1";
    case ElementKind::Spring6: return "spring6";
  }
  return "?";
}

namespace el {

ChainElement rigid(const Transform& t, std::string name) {
  ChainElement e;
  e.kind = ElementKind::Rigid;
  e.fixed_transform = t;
  e.name = std::move(name);
  return e;
}

ChainElement rigid(Axis axis, double value, std::string name) {
  return rigid(elementary(axis, value), std::move(name));
}

ChainElement passive(Axis axis, std::string name) {
  ChainElement e;
  e.kind = ElementKind::Passive;
  e.axis = axis;
  e.name = std::move(name);
  return e;
}

ChainElement actuated(Axis axis, double value, std::string name) {
  ChainElement e;
  e.kind = ElementKind::Actuated;
  e.axis = axis;
  e.value = value;
  e.name = std::move(name);
  return e;
}

ChainElement spring(Axis axis, double stiffness, std::string name) {
  ChainElement e;
  e.kind = ElementKind::Spring1;
  e.axis = axis;
  e.stiffness = stiffness;
  e.name = std::move(name);
  return e;
}

ChainElement spring(const Matrix6& stiffness, std::string name) {
  ChainElement e;
  e.kind = ElementKind::Spring6;
  e.stiffness6 = stiffness;
  e.name = std::move(name);
  return e;
}

}  // namespace el

namespace {

[[noreturn]] void element_error(size_t index, const ChainElement& e,
                                const std::string& what) {
  std::ostringstream os;
  os << "chain element " << index << " (" << element_kind_name(e.kind);
  if (!e.name.empty()) os << " '" << e.name << "'";
  os << "): " << what;
  throw std::invalid_argument(os.str());
}

void check_index_cover(const std::vector<int>& used, int count,
                       const char* label) {
  std::set<int> seen;
  for (int idx : used) {
    if (idx < 0 || idx >= count)
      throw std::invalid_argument(std::string(label) + " index " +
                                  std::to_string(idx) + " out of range 0.." +
                                  std::to_string(count - 1));
    if (!seen.insert(idx).second)
      throw std::invalid_argument(std::string("duplicate ") + label +
                                  " index " + std::to_string(idx));
  }
}

}  // namespace

ChainModel assemble_chain(std::string name, std::vector<ChainElement> elements) {
  ChainModel chain;
  chain.name = std::move(name);
  chain.elements = std::move(elements);

  // Sequential assignment for unset indices; explicit and implicit indexing
  // must not be mixed within a coordinate family.
  int next_q = 0;
  int next_theta = 0;
  bool explicit_q = false, implicit_q = false;
  bool explicit_theta = false, implicit_theta = false;
  for (size_t i = 0; i < chain.elements.size(); ++i) {
    ChainElement& e = chain.elements[i];
    switch (e.kind) {
      case ElementKind::Rigid:
        if (!is_valid_transform(e.fixed_transform))
          element_error(i, e, "fixed transform is not a valid rigid transform");
        break;
      case ElementKind::Actuated:
        if (!std::isfinite(e.value))
          element_error(i, e, "actuator value is not finite");
        break;
      case ElementKind::Passive:
        if (e.q_index < 0) {
          e.q_index = next_q;
          implicit_q = true;
        } else {
          explicit_q = true;
        }
        ++next_q;
        break;
      case ElementKind::Spring1:
        if (!(e.stiffness > 0.0) || !std::isfinite(e.stiffness))
          element_error(i, e, "spring stiffness must be positive");
        if (e.theta_index < 0) {
          e.theta_index = next_theta;
          implicit_theta = true;
        } else {
          explicit_theta = true;
        }
        ++next_theta;
        break;
      case ElementKind::Spring6:
        if (e.theta_index < 0) {
          e.theta_index = next_theta;
          implicit_theta = true;
        } else {
          explicit_theta = true;
        }
        next_theta += 6;
        break;
    }
  }
  if (explicit_q && implicit_q)
    throw std::invalid_argument(
        "chain '" + chain.name + "': mixed explicit and implicit q indices");
  if (explicit_theta && implicit_theta)
    throw std::invalid_argument(
        "chain '" + chain.name + "': mixed explicit and implicit theta indices");

  chain.passive_count = next_q;
  chain.spring_count = next_theta;

  std::vector<int> q_used, theta_used;
  for (const ChainElement& e : chain.elements) {
    if (e.kind == ElementKind::Passive) q_used.push_back(e.q_index);
    if (e.kind == ElementKind::Spring1) theta_used.push_back(e.theta_index);
    if (e.kind == ElementKind::Spring6)
      for (int k = 0; k < 6; ++k) theta_used.push_back(e.theta_index + k);
  }
  check_index_cover(q_used, chain.passive_count, "q");
  check_index_cover(theta_used, chain.spring_count, "theta");

  chain.spring_stiffness = MatrixX::Zero(chain.spring_count, chain.spring_count);
  for (size_t i = 0; i < chain.elements.size(); ++i) {
    const ChainElement& e = chain.elements[i];
    if (e.kind == ElementKind::Spring1) {
      chain.spring_stiffness(e.theta_index, e.theta_index) = e.stiffness;
    } else if (e.kind == ElementKind::Spring6) {
      const Matrix6 sym = 0.5 * (e.stiffness6 + e.stiffness6.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix6> eig(sym);
      if (eig.eigenvalues().minCoeff() <= 0.0)
        element_error(i, e,
                      "stiffness block is not positive definite (min eigenvalue " +
                          std::to_string(eig.eigenvalues().minCoeff()) + ")");
      chain.spring_stiffness.block<6, 6>(e.theta_index, e.theta_index) = sym;
    }
  }
  return chain;
}

Transform element_transform(const ChainElement& e, const VectorX& q,
                            const VectorX& theta) {
  switch (e.kind) {
    case ElementKind::Rigid:
      return e.fixed_transform;
    case ElementKind::Passive:
      return elementary(e.axis, q[e.q_index]);
    case ElementKind::Actuated:
      return elementary(e.axis, e.value);
    case ElementKind::Spring1:
      return elementary(e.axis, theta[e.theta_index]);
    case ElementKind::Spring6:
      return spring_transform(Vector6(theta.segment<6>(e.theta_index)));
  }
  return Transform::Identity();
}

void check_dimensions(const ChainModel& chain, const VectorX& q,
                      const VectorX& theta) {
  if (q.size() != chain.passive_count)
    throw std::invalid_argument("chain '" + chain.name + "': expected " +
                                std::to_string(chain.passive_count) +
                                " passive coordinates, got " +
                                std::to_string(q.size()));
  if (theta.size() != chain.spring_count)
    throw std::invalid_argument("chain '" + chain.name + "': expected " +
                                std::to_string(chain.spring_count) +
                                " spring coordinates, got " +
                                std::to_string(theta.size()));
}

Transform chain_transform(const ChainModel& chain, const VectorX& q,
                          const VectorX& theta) {
  check_dimensions(chain, q, theta);
  Transform t = Transform::Identity();
  for (const ChainElement& e : chain.elements)
    t = t * element_transform(e, q, theta);
  return t;
}

Pose forward_kinematics(const ChainModel& chain, const VectorX& q,
                        const VectorX& theta) {
  return pose_of(chain_transform(chain, q, theta));
}

VectorX spring_torques(const ChainModel& chain, const VectorX& theta) {
  if (theta.size() != chain.spring_count)
    throw std::invalid_argument("spring_torques: dimension mismatch");
  return chain.spring_stiffness * theta;
}

double elastic_energy(const ChainModel& chain, const VectorX& theta) {
  if (theta.size() != chain.spring_count)
    throw std::invalid_argument("elastic_energy: dimension mismatch");
  return 0.5 * theta.dot(chain.spring_stiffness * theta);
}

VectorX inverse_kinematics_unloaded(const ChainModel& chain, const Pose& target,
                                    const VectorX& q_guess, double tol,
                                    int max_iter) {
  if (chain.passive_count < 1)
    throw std::invalid_argument("inverse kinematics needs at least one passive joint");
  if (q_guess.size() != chain.passive_count)
    throw std::invalid_argument("inverse kinematics: guess dimension mismatch");

  const VectorX theta0 = VectorX::Zero(chain.spring_count);
  const double damping = 1e-6;
  const double max_rot_step = 0.2;    // rad per coordinate per iteration
  const double max_trans_step = 0.05; // m per coordinate per iteration

  std::vector<bool> rotational(chain.passive_count, false);
  for (const ChainElement& e : chain.elements)
    if (e.kind == ElementKind::Passive)
      rotational[e.q_index] = is_rotational(e.axis);

  VectorX q = q_guess;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Pose pose = forward_kinematics(chain, q, theta0);
    const Vector6 error = pose_diff(target, pose);
    const MatrixX jq = jacobians(chain, q, theta0).q;

    // Error component inside the controllable subspace (range of J_q).
    Eigen::JacobiSVD<MatrixX> svd(jq, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double sigma_max = svd.singularValues().size() > 0
                                 ? svd.singularValues()[0]
                                 : 0.0;
    Vector6 projected = Vector6::Zero();
    for (int k = 0; k < svd.singularValues().size(); ++k) {
      if (svd.singularValues()[k] > 1e-10 * std::max(sigma_max, 1.0)) {
        const Eigen::VectorXd u = svd.matrixU().col(k);
        projected += u * u.dot(error);
      }
    }
    if (projected.norm() < tol) return q;

    MatrixX lhs = jq.transpose() * jq;
    lhs.diagonal().array() += damping * damping;
    VectorX dq = lhs.ldlt().solve(jq.transpose() * error);
    for (int k = 0; k < dq.size(); ++k) {
      const double cap = rotational[k] ? max_rot_step : max_trans_step;
      dq[k] = std::clamp(dq[k], -cap, cap);
    }
    q += dq;
  }
  throw std::runtime_error("unreachable or singular target");
}

}  // namespace vjm
