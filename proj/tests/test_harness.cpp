#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vjmstiff/harness.hpp"
#include "vjmstiff/orthoglide.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace vjm;

namespace {

constexpr double kEulerLoad = 2.4674011002723395;  // pi^2 EI / (4 L^2)

Pose start_pose(const ChainModel& chain, const VectorX& q0) {
  return forward_kinematics(chain, q0, VectorX::Zero(chain.spring_count));
}

Vector6 compression() {
  Vector6 d = Vector6::Zero();
  d[0] = -1.0;
  return d;
}

SolverSettings sweep_settings(std::uint64_t seed) {
  SolverSettings s;
  s.rng_seed = seed;
  s.max_iter = 400;
  return s;
}

}  // namespace

TEST_CASE("linear spring sweeps are straight lines without buckling") {
  const ChainModel chain =
      assemble_chain("one", {el::spring(Axis::Tx, 1000.0)});
  Vector6 d = Vector6::Zero();
  d[0] = 1.0;
  const SweepCurve curve =
      displacement_sweep(chain, start_pose(chain, VectorX()), d, 4e-3, 1e-4,
                         VectorX(), sweep_settings(1));
  REQUIRE_FALSE(curve.truncated);
  CHECK(curve.samples.size() == 41);
  CHECK(curve.samples.front().delta == 0.0);
  CHECK(curve.samples.front().force == 0.0);
  for (size_t i = 0; i < curve.samples.size(); ++i) {
    const SweepSample& s = curve.samples[i];
    if (i > 0)
      CHECK(s.delta > curve.samples[i - 1].delta);
    CHECK(s.force == doctest::Approx(1000.0 * s.delta).epsilon(1e-9));
    CHECK(s.tangent == doctest::Approx(1000.0).epsilon(1e-9));
  }
  const BucklingReport report = detect_buckling(curve);
  CHECK_FALSE(report.detected);
  CHECK(report.k0 == doctest::Approx(1000.0));
  CHECK(report.k1 == doctest::Approx(1000.0));
}

TEST_CASE("pendulum column buckles at k/L") {
  const double rotational_k = 10.0, length = 1.0;
  const ChainModel column = pendulum_column(1e4, rotational_k, length);
  const VectorX q0 = VectorX::Zero(column.passive_count);
  const SweepCurve curve =
      displacement_sweep(column, start_pose(column, q0), compression(), 2.4e-3,
                         1e-5, q0, sweep_settings(7));
  REQUIRE_FALSE(curve.truncated);
  const BucklingReport report = detect_buckling(curve);
  REQUIRE(report.detected);
  CHECK(report.f_cr ==
        doctest::Approx(rotational_k / length).epsilon(0.01));
  CHECK(report.k0 == doctest::Approx(1e4).epsilon(1e-6));
  CHECK(report.k1 / report.k2 >= 10.0);
  CHECK(report.k2 < report.k1);
  CHECK(report.delta_cr > 0.0);
  CHECK(report.delta_cr < report.delta1);
  // The eigenvalue crossing and the tangent collapse locate the same step.
  CHECK(std::abs(report.eigenvalue_index - report.critical_index) <= 2);
}

TEST_CASE("euler cantilever column converges to the analytic critical load") {
  double previous_error = 0.0;
  for (int segments : {8, 16}) {
    const ChainModel column = euler_column(segments, 1.0, 1.0, 2467.0);
    const VectorX q0 = VectorX::Zero(column.passive_count);
    const SweepCurve curve =
        displacement_sweep(column, start_pose(column, q0), compression(),
                           1.6e-3, 8e-6, q0, sweep_settings(13));
    REQUIRE_FALSE(curve.truncated);
    const BucklingReport report = detect_buckling(curve);
    REQUIRE(report.detected);
    const double error = std::abs(report.f_cr - kEulerLoad);
    if (segments == 8) {
      CHECK(error / kEulerLoad < 0.10);
      previous_error = error;
    } else {
      CHECK(error < previous_error);  // finer discretization improves F_cr
    }
    CHECK(std::abs(report.eigenvalue_index - report.critical_index) <= 2);
  }
}

TEST_CASE("halving the step reproduces the coarse curve away from critical") {
  const ChainModel column = pendulum_column(1e4, 10.0, 1.0);
  const VectorX q0 = VectorX::Zero(column.passive_count);
  const Pose start = start_pose(column, q0);
  const SweepCurve coarse = displacement_sweep(
      column, start, compression(), 2.0e-3, 2e-5, q0, sweep_settings(3));
  const SweepCurve fine = displacement_sweep(
      column, start, compression(), 2.0e-3, 1e-5, q0, sweep_settings(3));
  REQUIRE_FALSE(coarse.truncated);
  REQUIRE_FALSE(fine.truncated);
  const double delta_cr = detect_buckling(fine).delta_cr;
  for (size_t i = 0; i < coarse.samples.size(); ++i) {
    const SweepSample& c = coarse.samples[i];
    if (std::abs(c.delta - delta_cr) <= 10 * 2e-5) continue;
    const SweepSample& f = fine.samples[2 * i];
    REQUIRE(f.delta == doctest::Approx(c.delta).epsilon(1e-12));
    if (std::abs(c.force) > 1e-9)
      CHECK(std::abs(f.force - c.force) / std::abs(c.force) < 1e-3);
  }
}

TEST_CASE("sweep input validation") {
  const ChainModel chain =
      assemble_chain("one", {el::spring(Axis::Tx, 1000.0)});
  const Pose start = start_pose(chain, VectorX());
  Vector6 d = Vector6::Zero();
  d[0] = 1.0;
  CHECK_THROWS_AS(displacement_sweep(chain, start, d, 1e-3, 0.0, VectorX()),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      displacement_sweep(chain, start, Vector6(2.0 * d), 1e-3, 1e-4, VectorX()),
      std::invalid_argument);

  SweepCurve tiny;
  tiny.samples.resize(4);
  CHECK_THROWS_AS(detect_buckling(tiny), std::invalid_argument);
}

TEST_CASE("sweeps truncate cleanly when the target leaves the reachable set") {
  const ChainModel chain =
      assemble_chain("one", {el::spring(Axis::Tx, 1000.0)});
  Vector6 lateral = Vector6::Zero();
  lateral[1] = 1.0;  // the spring cannot follow y
  SolverSettings fast = sweep_settings(2);
  fast.max_iter = 15;
  fast.max_restarts = 1;
  const SweepCurve curve = displacement_sweep(
      chain, start_pose(chain, VectorX()), lateral, 1e-3, 1e-4, VectorX(), fast);
  CHECK(curve.truncated);
  CHECK(curve.samples.size() == 1);  // the delta = 0 sample converged
  CHECK(curve.failure.find("solver failed") != std::string::npos);
}

TEST_CASE("orthoglide postures") {
  const double pi6 = std::numbers::pi / 6.0;
  const OrthoglideChain a = orthoglide_chain(OrthoglidePosture::A);
  CHECK(a.chain.passive_count == 4);
  CHECK(a.chain.spring_count == 13);
  CHECK(a.q0.isZero());

  const OrthoglideChain b = orthoglide_chain(OrthoglidePosture::B);
  CHECK(b.q0[0] == 0.0);
  CHECK(b.q0[1] == doctest::Approx(pi6));
  CHECK(b.q0[2] == doctest::Approx(-pi6));
  CHECK(b.q0[3] == 0.0);

  const OrthoglideChain c = orthoglide_chain(OrthoglidePosture::C);
  CHECK(c.q0[0] == doctest::Approx(pi6));
  CHECK(c.q0[1] == 0.0);
  CHECK(c.q0[2] == 0.0);
  CHECK(c.q0[3] == doctest::Approx(-pi6));

  const OrthoglideChain d = orthoglide_chain(OrthoglidePosture::D);
  CHECK(d.q0[0] == doctest::Approx(pi6));
  CHECK(d.q0[1] == doctest::Approx(pi6));
  CHECK(d.q0[2] == doctest::Approx(-pi6));
  CHECK(d.q0[3] == doctest::Approx(-pi6));

  // Tool orientation is preserved at every posture (translational machine).
  for (const OrthoglideChain* leg : {&a, &b, &c, &d}) {
    const Pose pose = start_pose(leg->chain, leg->q0);
    CHECK((pose.orientation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
          1e-12);
  }

  CHECK_THROWS_AS(parse_posture("E"), std::invalid_argument);
}

TEST_CASE("orthoglide posture A sweep shows the rise-knee-plateau shape") {
  const OrthoglideChain leg = orthoglide_chain(OrthoglidePosture::A);
  const SweepCurve curve = displacement_sweep(
      leg.chain, start_pose(leg.chain, leg.q0), orthoglide_default_direction(),
      4e-3, 4e-5, leg.q0, sweep_settings(11));
  REQUIRE_FALSE(curve.truncated);
  const BucklingReport report = detect_buckling(curve);
  REQUIRE(report.detected);
  // Near-linear rise at the unloaded tangent, then a collapse of more than
  // an order of magnitude, then a near-plateau in force.
  CHECK(report.k0 == doctest::Approx(2.481e6).epsilon(0.01));
  CHECK(report.k1 / report.k2 >= 10.0);
  CHECK(report.f_cr > 1e3);
  CHECK(report.f_cr < 1e4);
  const double final_force = curve.samples.back().force;
  const double knee_force = report.f_cr;
  CHECK(final_force < 1.15 * knee_force);  // plateau: little force growth
  CHECK(curve.samples.back().tangent < report.k0 / 100.0);
}

TEST_CASE("paper-step sweeps need no restarts away from the critical region") {
  // 0.001 mm continuation on posture A up to ~70% of the critical load.
  const OrthoglideChain leg = orthoglide_chain(OrthoglidePosture::A);
  const SweepCurve curve = displacement_sweep(
      leg.chain, start_pose(leg.chain, leg.q0), orthoglide_default_direction(),
      0.75e-3, 1e-6, leg.q0, sweep_settings(17));
  REQUIRE_FALSE(curve.truncated);
  CHECK(curve.samples.size() == 751);
  for (const SweepSample& s : curve.samples) {
    CHECK(s.restarts == 0);
    CHECK(s.state.iterations_to_pose <= 5);
  }
}

TEST_CASE("compression softens the softest stiffness direction monotonically") {
  // Guarded pendulum rod (moment release only): the smallest eigenvalue of
  // K^F must be non-increasing with compressive displacement up to critical.
  Matrix6 base = Matrix6::Zero();
  base.diagonal() << 1e4, 1e9, 1e9, 1e9, 1e9, 10.0;
  std::vector<ChainElement> e;
  e.push_back(el::spring(base));
  e.push_back(el::rigid(Axis::Tx, 1.0));
  e.push_back(el::passive(Axis::Rz));
  const ChainModel rod = assemble_chain("pendulum-rod", std::move(e));
  const VectorX q0 = VectorX::Zero(1);
  const SweepCurve curve =
      displacement_sweep(rod, start_pose(rod, q0), compression(), 0.9e-3, 3e-5,
                         q0, sweep_settings(23));
  REQUIRE_FALSE(curve.truncated);
  double previous = std::numeric_limits<double>::infinity();
  for (const SweepSample& s : curve.samples) {
    const double smallest = s.state.converged
                                ? stiffness_loaded(rod, s.state).eigenvalues[0]
                                : previous;
    CHECK(smallest <= previous + 1e-9);
    previous = smallest;
  }
}

TEST_CASE("unloaded axial stiffness at posture A matches the published value") {
  // Published 3228 N/mm; geometry is assumed so the band is wide (25%).
  const OrthoglideChain leg = orthoglide_chain(OrthoglidePosture::A);
  const StiffnessResult k = stiffness_unloaded(leg.chain, leg.q0);
  const double axial = k.stiffness(0, 0);
  CHECK(axial > 0.75 * 3.228e6);
  CHECK(axial < 1.25 * 3.228e6);
}
