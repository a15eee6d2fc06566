#include "vjmstiff/stiffness.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <stdexcept>

namespace vjm {

namespace {

StiffnessResult assemble(const ChainModel& chain, const VectorX& q,
                         const VectorX& theta, const Vector6& wrench,
                         double hessian_step) {
  const int n = chain.passive_count;
  const int m = chain.spring_count;

  StiffnessResult result;
  result.loaded = !wrench.isZero();
  result.pose = forward_kinematics(chain, q, theta);

  const JacobianPair jac = jacobians(chain, q, theta);
  const HessianSet h = hessians(chain, q, theta, wrench, hessian_step);

  // Effective spring block under load; its smallest eigenvalue is the
  // buckling indicator. The inverse goes through the eigendecomposition,
  // which covers the definite, indefinite and singular cases alike. The
  // singularity threshold is absolute in eps * ||block|| so that stiff
  // auxiliary spring directions cannot mask a soft mode near zero.
  const MatrixX spring_block = chain.spring_stiffness - h.thetatheta;
  Eigen::SelfAdjointEigenSolver<MatrixX> spring_eig(
      0.5 * (spring_block + spring_block.transpose()));
  result.spring_block_min_eig = spring_eig.eigenvalues().minCoeff();
  const double spring_scale =
      std::max(1.0, spring_eig.eigenvalues().cwiseAbs().maxCoeff());
  const double spring_tol = 1e-14 * spring_scale;
  if (result.spring_block_min_eig <= spring_tol) {
    result.critical = true;
    result.note = "critical: spring block singular (min eigenvalue " +
                  std::to_string(result.spring_block_min_eig) + ")";
  }

  VectorX spring_inv = spring_eig.eigenvalues();
  for (int i = 0; i < m; ++i)
    spring_inv[i] =
        std::abs(spring_inv[i]) > spring_tol ? 1.0 / spring_inv[i] : 0.0;
  const MatrixX kf = spring_eig.eigenvectors() * spring_inv.asDiagonal() *
                     spring_eig.eigenvectors().transpose();

  MatrixX bordered(6 + n, 6 + n);
  const MatrixX kf_jt = kf * jac.theta.transpose();   // m x 6
  const MatrixX kf_hthq = kf * h.qtheta.transpose();  // m x n
  bordered.topLeftCorner(6, 6) = jac.theta * kf_jt;
  bordered.topRightCorner(6, n) = jac.q + jac.theta * kf_hthq;
  bordered.bottomLeftCorner(n, 6) = jac.q.transpose() + h.qtheta * kf_jt;
  bordered.bottomRightCorner(n, n) = h.qq + h.qtheta * kf_hthq;

  // Invert the bordered matrix; fall back to a pseudo-inverse when the chain
  // cannot move (or cannot resist) in some directions, leaving the
  // corresponding stiffness rows zero instead of erroring. The matrix mixes
  // compliance-scale and Hessian-scale blocks, so it is symmetrically
  // equilibrated first to keep the rank decision meaningful per direction.
  VectorX equil(6 + n);
  for (int i = 0; i < 6 + n; ++i) {
    const double row_max = bordered.row(i).cwiseAbs().maxCoeff();
    equil[i] = row_max > 0.0 ? 1.0 / std::sqrt(row_max) : 1.0;
  }
  const MatrixX scaled =
      equil.asDiagonal() * bordered * equil.asDiagonal();
  Eigen::JacobiSVD<MatrixX> svd(scaled,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma0 = svd.singularValues()[0];
  const double rank_tol = 1e-10 * std::max(sigma0, 1.0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > rank_tol) ++rank;
  if (rank < 6 + n) {
    result.singular = true;
    if (!result.note.empty()) result.note += "; ";
    result.note += "singular configuration (pseudo-inverse used, rank " +
                   std::to_string(rank) + "/" + std::to_string(6 + n) + ")";
  }
  VectorX inv = svd.singularValues();
  for (int i = 0; i < inv.size(); ++i)
    inv[i] = inv[i] > rank_tol ? 1.0 / inv[i] : 0.0;
  const MatrixX full_inverse =
      equil.asDiagonal() *
      (svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose()) *
      equil.asDiagonal();

  const Matrix6 raw = full_inverse.topLeftCorner(6, 6);
  const Matrix6 sym = 0.5 * (raw + raw.transpose());
  const double scale = std::max(1e-300, sym.cwiseAbs().maxCoeff());
  result.asymmetry = 0.5 * (raw - raw.transpose()).cwiseAbs().maxCoeff() / scale;
  result.stiffness = sym;

  Eigen::SelfAdjointEigenSolver<Matrix6> eig(sym);
  result.eigenvalues = eig.eigenvalues();
  return result;
}

}  // namespace

StiffnessResult stiffness_loaded(const ChainModel& chain,
                                 const EquilibriumState& state,
                                 double hessian_step) {
  check_dimensions(chain, state.q, state.theta);
  return assemble(chain, state.q, state.theta, state.wrench, hessian_step);
}

StiffnessResult stiffness_unloaded(const ChainModel& chain, const VectorX& q0) {
  const VectorX theta = VectorX::Zero(chain.spring_count);
  check_dimensions(chain, q0, theta);
  return assemble(chain, q0, theta, Vector6::Zero(), 1e-6);
}

StiffnessResult aggregate_parallel(const std::vector<StiffnessResult>& results,
                                   double pose_tol) {
  if (results.empty())
    throw std::invalid_argument("aggregate_parallel: empty result list");
  StiffnessResult total = results.front();
  for (size_t i = 1; i < results.size(); ++i) {
    const StiffnessResult& r = results[i];
    const Vector6 gap = pose_diff(r.pose, total.pose);
    if (gap.head<3>().norm() > pose_tol || gap.tail<3>().norm() > pose_tol)
      throw std::invalid_argument(
          "aggregate_parallel: chains do not share the end-effector frame");
    total.stiffness += r.stiffness;
    total.loaded = total.loaded || r.loaded;
    total.critical = total.critical || r.critical;
    total.spring_block_min_eig =
        std::min(total.spring_block_min_eig, r.spring_block_min_eig);
    total.asymmetry = std::max(total.asymmetry, r.asymmetry);
  }
  Eigen::SelfAdjointEigenSolver<Matrix6> eig(total.stiffness);
  total.eigenvalues = eig.eigenvalues();
  // Parallel chains can stiffen each other's free directions, so singularity
  // is a property of the sum, not of the parts.
  const double top = total.eigenvalues.cwiseAbs().maxCoeff();
  total.singular = total.eigenvalues.cwiseAbs().minCoeff() <= 1e-10 * top;
  total.note.clear();
  return total;
}

double directional_stiffness(const StiffnessResult& result,
                             const Vector6& direction) {
  return direction.dot(result.stiffness * direction);
}

}  // namespace vjm
