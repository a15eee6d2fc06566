#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vjmstiff/harness.hpp"
#include "vjmstiff/orthoglide.hpp"
#include "vjmstiff/stiffness.hpp"
#include "oracles.hpp"

using namespace vjm;

namespace {

Pose unloaded_pose(const ChainModel& chain, const VectorX& q0) {
  return forward_kinematics(chain, q0, VectorX::Zero(chain.spring_count));
}

}  // namespace

TEST_CASE("loaded stiffness at zero wrench equals the unloaded model") {
  const OrthoglideChain leg = orthoglide_chain(OrthoglidePosture::C);
  EquilibriumState state;
  state.q = leg.q0;
  state.theta = VectorX::Zero(leg.chain.spring_count);
  state.wrench = Vector6::Zero();
  state.converged = true;
  const StiffnessResult loaded = stiffness_loaded(leg.chain, state);
  const StiffnessResult unloaded = stiffness_unloaded(leg.chain, leg.q0);
  const double scale = unloaded.stiffness.cwiseAbs().maxCoeff();
  CHECK((loaded.stiffness - unloaded.stiffness).cwiseAbs().maxCoeff() <
        1e-10 * scale);
  CHECK(loaded.loaded == false);
}

TEST_CASE("series springs: the classic law through the singular block") {
  const ChainModel chain = assemble_chain(
      "series", {el::spring(Axis::Tx, 1000.0), el::spring(Axis::Tx, 2000.0)});
  const StiffnessResult k = stiffness_unloaded(chain, VectorX());
  CHECK(k.stiffness(0, 0) == doctest::Approx(2000.0 / 3.0).epsilon(1e-10));
  // The chain cannot move or resist in the other directions, so the block
  // matrix is singular: flagged, not an error, with zero stiffness there.
  CHECK(k.singular);
  CHECK(k.stiffness.bottomRightCorner(5, 5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("passive joint along the probe leaves a zero-stiffness direction") {
  std::vector<ChainElement> e;
  e.push_back(el::passive(Axis::Tx));
  e.push_back(el::spring(Axis::Ty, 800.0));
  const ChainModel chain = assemble_chain("slider", std::move(e));
  const StiffnessResult k = stiffness_unloaded(chain, VectorX::Zero(1));
  CHECK(k.singular);
  CHECK(std::abs(k.stiffness(0, 0)) < 1e-9);          // free along x
  CHECK(k.stiffness(1, 1) == doctest::Approx(800.0));  // sprung along y
  CHECK(k.eigenvalues.minCoeff() < 1e-9);
}

TEST_CASE("inverted pendulum: lateral softening under axial load") {
  // Base rotational spring k, rigid link L, tip moment released through a
  // passive joint: lateral tangent stiffness k/L^2 - f/L under compressive
  // f. At k=10, L=1, f=4 that is 6 N/m.
  const double rotational_k = 10.0, length = 1.0, axial_force = 4.0;
  const double axial_k = 1e4;
  Matrix6 base = Matrix6::Zero();
  base.diagonal() << axial_k, 1e9, 1e9, 1e9, 1e9, rotational_k;
  std::vector<ChainElement> e;
  e.push_back(el::spring(base));
  e.push_back(el::rigid(Axis::Tx, length));
  e.push_back(el::passive(Axis::Rz, "tip moment release"));
  const ChainModel column = assemble_chain("pendulum-rod", std::move(e));

  const VectorX q0 = VectorX::Zero(column.passive_count);
  const VectorX theta0 = VectorX::Zero(column.spring_count);
  Pose target = unloaded_pose(column, q0);
  target.position[0] -= axial_force / axial_k;
  const EquilibriumState state = solve_equilibrium(column, target, q0, theta0);
  REQUIRE(state.converged);
  CHECK(std::abs(-state.wrench[0] - axial_force) < 1e-6);

  const StiffnessResult k = stiffness_loaded(column, state);
  Vector6 lateral = Vector6::Zero();
  lateral[1] = 1.0;
  CHECK(directional_stiffness(k, lateral) ==
        doctest::Approx(rotational_k / (length * length) -
                        axial_force / length)
            .epsilon(1e-3));

  // Unloaded it is k/L^2.
  const StiffnessResult k0 = stiffness_unloaded(column, q0);
  CHECK(directional_stiffness(k0, lateral) ==
        doctest::Approx(rotational_k / (length * length)).epsilon(1e-3));
}

TEST_CASE("critical flag fires when the spring block loses definiteness") {
  const ChainModel column = pendulum_column(1e4, 10.0, 1.0);
  const VectorX q0 = VectorX::Zero(column.passive_count);
  const VectorX theta0 = VectorX::Zero(column.spring_count);
  Pose target = unloaded_pose(column, q0);
  target.position[0] -= 1.5e-3;  // straight branch past critical (f > k/L)

  SolverSettings frozen;
  frozen.check_stability = false;
  frozen.max_restarts = 0;
  const EquilibriumState state =
      solve_equilibrium(column, target, q0, theta0, frozen);
  REQUIRE(state.converged);
  const StiffnessResult k = stiffness_loaded(column, state);
  CHECK(k.critical);
  CHECK(k.spring_block_min_eig < 0.0);
  CHECK(k.note.find("critical") != std::string::npos);
}

TEST_CASE("stiffness matrices are symmetric with tiny reported asymmetry") {
  const OrthoglideChain leg = orthoglide_chain(OrthoglidePosture::A);
  const VectorX theta0 = VectorX::Zero(leg.chain.spring_count);
  Pose target = unloaded_pose(leg.chain, leg.q0);
  target.position[0] -= 5e-4;
  SolverSettings settings;
  settings.max_iter = 400;
  const EquilibriumState state =
      solve_equilibrium(leg.chain, target, leg.q0, theta0, settings);
  REQUIRE(state.converged);
  const StiffnessResult k = stiffness_loaded(leg.chain, state);
  CHECK((k.stiffness - k.stiffness.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.asymmetry < 1e-8);
}

TEST_CASE("parallel aggregation") {
  // Identity on a single result.
  const ChainModel chain =
      assemble_chain("one", {el::spring(Axis::Tx, 1000.0)});
  const StiffnessResult k = stiffness_unloaded(chain, VectorX());
  const StiffnessResult same = aggregate_parallel({k});
  CHECK(same.stiffness.isApprox(k.stiffness));

  // Two copies of the same chain double the stiffness exactly.
  const StiffnessResult twice = aggregate_parallel({k, k});
  CHECK(twice.stiffness.isApprox(2.0 * k.stiffness, 1e-15));

  // Three identical orthogonal chains: a spring6 block rotated through the
  // axis permutations x->y->z->x sums to an isotropic translational block.
  Matrix6 block = Matrix6::Zero();
  const double a = 900.0, b = 300.0;
  block.diagonal() << a, b, b, 50.0, 20.0, 20.0;
  auto rotated_chain = [&](double angle, Axis axis) {
    std::vector<ChainElement> e;
    e.push_back(el::rigid(axis, angle));
    e.push_back(el::spring(block));
    e.push_back(el::rigid(axis, -angle));
    return assemble_chain("rot", std::move(e));
  };
  const double half_pi = std::numbers::pi / 2.0;
  std::vector<StiffnessResult> legs;
  legs.push_back(stiffness_unloaded(rotated_chain(0.0, Axis::Rz), VectorX()));
  legs.push_back(stiffness_unloaded(rotated_chain(half_pi, Axis::Rz), VectorX()));
  legs.push_back(stiffness_unloaded(rotated_chain(-half_pi, Axis::Ry), VectorX()));
  const StiffnessResult combined = aggregate_parallel(legs);
  const Eigen::Matrix3d trans = combined.stiffness.topLeftCorner<3, 3>();
  CHECK(trans.isApprox(Eigen::Matrix3d::Identity() * (a + 2 * b), 1e-9));

  CHECK_THROWS_AS(aggregate_parallel({}), std::invalid_argument);

  // Frame check: results at different poses refuse to sum.
  std::vector<ChainElement> moved;
  moved.push_back(el::rigid(Axis::Tx, 0.5));
  moved.push_back(el::spring(Axis::Tx, 1000.0));
  const StiffnessResult far =
      stiffness_unloaded(assemble_chain("moved", std::move(moved)), VectorX());
  CHECK_THROWS_WITH_AS(aggregate_parallel({k, far}),
                       doctest::Contains("frame"), std::invalid_argument);
}
