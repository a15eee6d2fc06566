#include "vjmstiff/equilibrium.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vjm {

namespace {

double weighted_pose_norm(const Vector6& twist, double characteristic_length) {
  const double trans = twist.head<3>().squaredNorm();
  const double rot = twist.tail<3>().squaredNorm();
  return std::sqrt(trans + characteristic_length * characteristic_length * rot);
}

double static_deficit(const ChainModel& chain, const JacobianPair& jac,
                      const VectorX& theta, const Vector6& wrench) {
  const VectorX spring_gap =
      jac.theta.transpose() * wrench - chain.spring_stiffness * theta;
  const double spring_scale = 1.0 + (chain.spring_stiffness * theta).norm();
  double deficit = spring_gap.norm() / spring_scale;
  if (chain.passive_count > 0) {
    const VectorX passive_gap = jac.q.transpose() * wrench;
    deficit = std::max(deficit, passive_gap.norm() / (1.0 + wrench.norm()));
  }
  return deficit;
}

// Uniform in [-1, 1), fully specified (independent of library distributions).
double symmetric_uniform(std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

}  // namespace

std::pair<double, double> residuals(const ChainModel& chain, const Pose& target,
                                    const VectorX& q, const VectorX& theta,
                                    const Vector6& wrench,
                                    double characteristic_length) {
  check_dimensions(chain, q, theta);
  const Pose pose = forward_kinematics(chain, q, theta);
  const JacobianPair jac = jacobians(chain, q, theta);
  const double pose_res =
      weighted_pose_norm(pose_diff(target, pose), characteristic_length);
  return {pose_res, static_deficit(chain, jac, theta, wrench)};
}

std::pair<VectorX, VectorX> perturb_restart(const VectorX& q,
                                            const VectorX& theta, double noise,
                                            std::mt19937_64& rng) {
  if (noise < 0.0) throw std::invalid_argument("perturb_restart: negative noise");
  VectorX qn = q;
  VectorX tn = theta;
  for (int i = 0; i < qn.size(); ++i) qn[i] += noise * symmetric_uniform(rng);
  for (int i = 0; i < tn.size(); ++i) tn[i] += noise * symmetric_uniform(rng);
  return {std::move(qn), std::move(tn)};
}

double stability_margin(const ChainModel& chain, const VectorX& q,
                        const VectorX& theta, const Vector6& wrench,
                        double hessian_step) {
  const int n = chain.passive_count;
  const int m = chain.spring_count;
  const JacobianPair jac = jacobians(chain, q, theta);
  MatrixX constraint(6, n + m);
  constraint.leftCols(n) = jac.q;
  constraint.rightCols(m) = jac.theta;

  Eigen::JacobiSVD<MatrixX> svd(constraint, Eigen::ComputeFullV);
  const double sigma0 =
      svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
  int rank = 0;
  for (int k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()[k] > 1e-10 * std::max(sigma0, 1.0)) ++rank;
  const int kernel_dim = n + m - rank;
  if (kernel_dim == 0)  // no internal motion at fixed pose
    return std::numeric_limits<double>::infinity();
  const MatrixX kernel = svd.matrixV().rightCols(kernel_dim);

  const HessianSet h = hessians(chain, q, theta, wrench, hessian_step);
  MatrixX w(n + m, n + m);
  w.topLeftCorner(n, n) = -h.qq;
  w.topRightCorner(n, m) = -h.qtheta;
  w.bottomLeftCorner(m, n) = -h.qtheta.transpose();
  w.bottomRightCorner(m, m) = chain.spring_stiffness - h.thetatheta;

  const MatrixX projected = kernel.transpose() * w * kernel;
  Eigen::SelfAdjointEigenSolver<MatrixX> eig(
      0.5 * (projected + projected.transpose()));
  return eig.eigenvalues().minCoeff();
}

bool equilibrium_stable(const ChainModel& chain, const VectorX& q,
                        const VectorX& theta, const Vector6& wrench,
                        double hessian_step) {
  const double margin = stability_margin(chain, q, theta, wrench, hessian_step);
  if (std::isinf(margin)) return true;
  // Tolerance tracks eigensolver accuracy (eps * ||W||), not the spectrum
  // spread: soft unstable modes must not hide behind stiff stable ones.
  // The margin itself carries the scale, so a small absolute band suffices.
  return margin >= -1e-7 * std::max(1.0, std::abs(margin));
}

namespace {

struct AttemptResult {
  enum class Status { Converged, Stalled, OutOfIterations, Singular };
  Status status = Status::OutOfIterations;
  int iterations = 0;
  int iterations_to_pose = 0;
  double worst_linear_residual = 0.0;
};

AttemptResult run_attempt(const ChainModel& chain, const Pose& target,
                          const Eigen::LLT<MatrixX>& stiffness_llt,
                          const SolverSettings& settings, VectorX& q,
                          VectorX& theta, Vector6& wrench, Pose& pose,
                          double& res_pose, double& res_static) {
  const int n = chain.passive_count;
  AttemptResult result;

  pose = forward_kinematics(chain, q, theta);
  JacobianPair jac = jacobians(chain, q, theta);
  res_pose = weighted_pose_norm(pose_diff(target, pose),
                                settings.characteristic_length);
  res_static = static_deficit(chain, jac, theta, wrench);

  int stall_count = 0;
  double prev_res_pose = res_pose;
  for (int iter = 0; iter < settings.max_iter; ++iter) {
    if (res_pose < settings.tol_pose && res_static < settings.tol_static) {
      result.status = AttemptResult::Status::Converged;
      return result;
    }

    // K_th^-1 J_th^T reused for both the saddle block and the theta update.
    const MatrixX compliant_jt = stiffness_llt.solve(jac.theta.transpose());
    MatrixX saddle = MatrixX::Zero(6 + n, 6 + n);
    saddle.topLeftCorner(6, 6) = jac.theta * compliant_jt;
    saddle.topRightCorner(6, n) = jac.q;
    saddle.bottomLeftCorner(n, 6) = jac.q.transpose();
    VectorX rhs = VectorX::Zero(6 + n);
    rhs.head<6>() = pose_diff(target, pose) + jac.theta * theta;

    Eigen::JacobiSVD<MatrixX> svd(saddle,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    const VectorX solution = svd.solve(rhs);
    if (!solution.allFinite()) {
      result.status = AttemptResult::Status::Singular;
      return result;
    }
    result.worst_linear_residual =
        std::max(result.worst_linear_residual,
                 (saddle * solution - rhs).norm() / (1.0 + rhs.norm()));

    wrench = solution.head<6>();
    q += solution.tail(n);
    theta = compliant_jt * wrench;
    ++result.iterations;

    pose = forward_kinematics(chain, q, theta);
    jac = jacobians(chain, q, theta);
    res_pose = weighted_pose_norm(pose_diff(target, pose),
                                  settings.characteristic_length);
    res_static = static_deficit(chain, jac, theta, wrench);
    if (res_pose < settings.tol_pose && result.iterations_to_pose == 0)
      result.iterations_to_pose = result.iterations;

    // Oscillation watch: restart when the pose residual has not improved by
    // factor 0.99 over one window of consecutive iterations. Below tolerance
    // the pose residual is noise, and the static residual is still allowed to
    // grind down within the iteration budget (it contracts slowly near
    // buckling), so the watch only runs while the pose is unconverged.
    if (res_pose >= settings.tol_pose) {
      if (res_pose > 0.99 * prev_res_pose)
        ++stall_count;
      else
        stall_count = 0;
      if (stall_count >= 10) {
        result.status = AttemptResult::Status::Stalled;
        return result;
      }
    } else {
      stall_count = 0;
    }
    prev_res_pose = res_pose;
  }
  if (res_pose < settings.tol_pose && res_static < settings.tol_static)
    result.status = AttemptResult::Status::Converged;
  return result;
}

}  // namespace

EquilibriumState solve_equilibrium(const ChainModel& chain, const Pose& target,
                                   const VectorX& q_start,
                                   const VectorX& theta_start,
                                   const SolverSettings& settings) {
  check_dimensions(chain, q_start, theta_start);
  if (chain.spring_count < 1)
    throw std::invalid_argument("solve_equilibrium: chain has no virtual springs");
  if (!(settings.tol_pose > 0.0) || !(settings.tol_static > 0.0))
    throw std::invalid_argument("solve_equilibrium: tolerances must be positive");

  Eigen::LLT<MatrixX> stiffness_llt(chain.spring_stiffness);
  if (stiffness_llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "solve_equilibrium: K_theta is not positive definite");

  std::mt19937_64 rng(settings.rng_seed);

  EquilibriumState state;
  state.target = target;
  state.q = q_start;
  state.theta = theta_start;

  VectorX q = q_start;
  VectorX theta = theta_start;

  bool have_best = false;
  EquilibriumState best;
  double worst_linear = 0.0;

  for (int attempt = 0; attempt <= settings.max_restarts; ++attempt) {
    Vector6 wrench = Vector6::Zero();
    Pose pose;
    double res_pose = 0.0, res_static = 0.0;
    AttemptResult attempt_result =
        run_attempt(chain, target, stiffness_llt, settings, q, theta, wrench,
                    pose, res_pose, res_static);
    state.iterations += attempt_result.iterations;
    state.iterations_to_pose = attempt_result.iterations_to_pose;
    worst_linear = std::max(worst_linear, attempt_result.worst_linear_residual);

    EquilibriumState candidate = state;
    candidate.q = q;
    candidate.theta = theta;
    candidate.wrench = wrench;
    candidate.pose = pose;
    candidate.residual_pose = res_pose;
    candidate.residual_static = res_static;

    if (attempt_result.status == AttemptResult::Status::Converged) {
      candidate.converged = true;
      if (settings.check_stability) {
        candidate.stability_margin =
            stability_margin(chain, q, theta, wrench, settings.hessian_step);
        candidate.stable =
            std::isinf(candidate.stability_margin) ||
            candidate.stability_margin >=
                -1e-7 * std::max(1.0, std::abs(candidate.stability_margin));
      }
      if (candidate.stable) return candidate;
      // Converged onto an unstable branch: keep it as a fallback and perturb.
      if (!have_best || !best.converged) {
        best = candidate;
        have_best = true;
      }
    } else {
      if (!have_best ||
          (!best.converged && candidate.residual_pose < best.residual_pose)) {
        best = candidate;
        have_best = true;
      }
    }

    if (attempt == settings.max_restarts) break;
    const double noise =
        settings.restart_noise * static_cast<double>(1ull << attempt);
    std::tie(q, theta) = perturb_restart(q, theta, noise, rng);
    ++state.restarts;
  }

  best.iterations = state.iterations;
  best.restarts = state.restarts;
  best.target = target;
  if (best.converged) {
    best.stable = false;
    best.message = "converged to an unstable equilibrium (restarts exhausted)";
    return best;
  }
  std::ostringstream os;
  os << "no equilibrium found after " << state.restarts << " restarts"
     << " (pose residual " << best.residual_pose << ", static residual "
     << best.residual_static << ")";
  if (worst_linear > 1e-9)
    os << "; target may be unattainable (saddle-system residual "
       << worst_linear << ")";
  best.message = os.str();
  best.converged = false;
  return best;
}

}  // namespace vjm
