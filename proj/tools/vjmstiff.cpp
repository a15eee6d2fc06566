// Command-line front end: chain validation, single-point equilibrium and
// stiffness queries, force-displacement sweeps with buckling reports, and
// batch stiffness maps.

#include "vjmstiff/chain_io.hpp"
#include "vjmstiff/harness.hpp"
#include "vjmstiff/orthoglide.hpp"
#include "vjmstiff/serialize.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <atomic>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace {

using namespace vjm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitSingular = 3;

struct ChainSource {
  ChainModel chain;
  VectorX q0;
  std::optional<OrthoglideGeometry> assumed_geometry;
};

ChainSource resolve_chain(const std::string& chain_file,
                          const std::string& posture) {
  if (chain_file.empty() == posture.empty())
    throw std::runtime_error("need exactly one of --chain or --posture");
  ChainSource source;
  if (!chain_file.empty()) {
    source.chain = load_chain_file(chain_file);
    source.q0 = VectorX::Zero(source.chain.passive_count);
  } else {
    OrthoglideChain leg = orthoglide_chain(parse_posture(posture));
    source.chain = std::move(leg.chain);
    source.q0 = leg.q0;
    source.assumed_geometry = leg.geometry;
  }
  return source;
}

Vector6 parse_vector6(const std::string& text, const char* flag) {
  Vector6 v;
  std::stringstream ss(text);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 6) throw std::runtime_error(std::string(flag) + ": expected 6 components");
    v[i++] = std::stod(item);
  }
  if (i != 6) throw std::runtime_error(std::string(flag) + ": expected 6 components");
  return v;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_file_atomic(out_path, content);
}

std::string equilibrium_csv(const EquilibriumState& state,
                            const StiffnessResult& stiffness) {
  std::ostringstream os;
  os << "key,value\n";
  os << "converged," << (state.converged ? 1 : 0) << "\n";
  os << "stable," << (state.stable ? 1 : 0) << "\n";
  os << "iterations," << state.iterations << "\n";
  os << "restarts," << state.restarts << "\n";
  os << "residual_pose," << format_real(state.residual_pose) << "\n";
  os << "residual_static," << format_real(state.residual_static) << "\n";
  for (int i = 0; i < state.q.size(); ++i)
    os << "q" << i << "," << format_real(state.q[i]) << "\n";
  for (int i = 0; i < state.theta.size(); ++i)
    os << "theta" << i << "," << format_real(state.theta[i]) << "\n";
  for (int i = 0; i < 6; ++i)
    os << "F" << i << "," << format_real(state.wrench[i]) << "\n";
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      os << "K" << r << c << "," << format_real(stiffness.stiffness(r, c)) << "\n";
  for (int i = 0; i < 6; ++i)
    os << "K_eig" << i << "," << format_real(stiffness.eigenvalues[i]) << "\n";
  os << "critical," << (stiffness.critical ? 1 : 0) << "\n";
  os << "singular," << (stiffness.singular ? 1 : 0) << "\n";
  return os.str();
}

struct MapAxis {
  std::string name;
  double lo = 0.0, hi = 0.0;
  int count = 1;
};

// Grid spec: "name=lo:hi:count;name=lo:hi:count"; names q0..q{n-1} for
// passive-joint space or x,y,z,rx,ry,rz for Cartesian offsets.
std::vector<MapAxis> parse_grid(const std::string& text) {
  std::vector<MapAxis> axes;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    MapAxis axis;
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("grid: expected name=lo:hi:count in '" + part + "'");
    axis.name = part.substr(0, eq);
    std::stringstream range(part.substr(eq + 1));
    std::string item;
    std::vector<std::string> pieces;
    while (std::getline(range, item, ':')) pieces.push_back(item);
    if (pieces.size() != 3)
      throw std::runtime_error("grid: expected lo:hi:count in '" + part + "'");
    axis.lo = std::stod(pieces[0]);
    axis.hi = std::stod(pieces[1]);
    axis.count = std::stoi(pieces[2]);
    if (axis.count < 1) throw std::runtime_error("grid: count must be >= 1");
    axes.push_back(axis);
  }
  if (axes.empty()) throw std::runtime_error("grid: empty specification");
  return axes;
}

int cartesian_axis_index(const std::string& name) {
  static const char* names[] = {"x", "y", "z", "rx", "ry", "rz"};
  for (int i = 0; i < 6; ++i)
    if (name == names[i]) return i;
  return -1;
}

struct SolverFlags {
  std::uint64_t seed = 0;
  int max_iter = 400;
  double tol_pose = 1e-9;
  double tol_static = 1e-8;
  int max_restarts = 10;
  double noise = 1e-4;

  SolverSettings settings() const {
    SolverSettings s;
    s.rng_seed = seed;
    s.max_iter = max_iter;
    s.tol_pose = tol_pose;
    s.tol_static = tol_static;
    s.max_restarts = max_restarts;
    s.restart_noise = noise;
    return s;
  }
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--seed", flags.seed, "RNG seed for restart noise");
  cmd->add_option("--max-iter", flags.max_iter, "iteration budget per attempt");
  cmd->add_option("--tol-pose", flags.tol_pose, "pose residual tolerance (m)");
  cmd->add_option("--tol-static", flags.tol_static,
                  "relative static residual tolerance");
  cmd->add_option("--restarts", flags.max_restarts, "maximum random restarts");
  cmd->add_option("--noise", flags.noise, "restart noise amplitude");
}

int run_validate(const std::string& chain_file, const std::string& posture) {
  const ChainSource source = resolve_chain(chain_file, posture);
  const ChainModel& chain = source.chain;
  Eigen::SelfAdjointEigenSolver<MatrixX> eig(chain.spring_stiffness);
  std::ostringstream os;
  os << "n=" << chain.passive_count << " m=" << chain.spring_count
     << " K_theta_eigs=[";
  for (int i = 0; i < eig.eigenvalues().size(); ++i)
    os << (i ? ", " : "") << format_real(eig.eigenvalues()[i]);
  os << "]\n";
  const Pose pose = forward_kinematics(
      chain, VectorX::Zero(chain.passive_count),
      VectorX::Zero(chain.spring_count));
  os << "unloaded position at q=0: (" << format_real(pose.position[0]) << ", "
     << format_real(pose.position[1]) << ", " << format_real(pose.position[2])
     << ")\n";
  os << "elements: " << chain.elements.size() << "\n";
  std::cout << os.str();
  return kExitOk;
}

int run_equilibrium(const ChainSource& source, const Vector6& offset,
                    const SolverFlags& flags, const std::string& out,
                    const std::string& format) {
  const ChainModel& chain = source.chain;
  const VectorX theta0 = VectorX::Zero(chain.spring_count);
  const Pose unloaded = forward_kinematics(chain, source.q0, theta0);
  const Pose target = apply_twist(unloaded, offset);
  const EquilibriumState state =
      solve_equilibrium(chain, target, source.q0, theta0, flags.settings());
  const StiffnessResult stiffness = stiffness_loaded(chain, state);
  emit(out, format == "csv" ? equilibrium_csv(state, stiffness)
                            : equilibrium_json(state, stiffness));
  if (!state.converged) {
    std::cerr << "vjmstiff: " << state.message << "\n";
    return state.message.find("singular") != std::string::npos
               ? kExitSingular
               : kExitNoConvergence;
  }
  return kExitOk;
}

int run_sweep(const ChainSource& source, const Vector6& direction, double dmax,
              double step, const SolverFlags& flags, const std::string& out) {
  const ChainModel& chain = source.chain;
  const Pose start = forward_kinematics(chain, source.q0,
                                        VectorX::Zero(chain.spring_count));
  log_line(1, "sweep: " + std::to_string(static_cast<int>(dmax / step) + 1) +
                  " displacement steps");
  const SweepCurve curve = displacement_sweep(chain, start, direction, dmax,
                                              step, source.q0, flags.settings());
  BucklingReport report;
  if (curve.samples.size() >= 10) {
    report = detect_buckling(curve);
  } else if (!curve.samples.empty()) {
    // Too few samples for detection; report the unloaded tangent only.
    report.k0 = report.k1 = report.k2 = report.k3 = curve.samples[0].tangent;
    log_line(1, "sweep too short for buckling detection");
  }

  std::string report_path = out;
  const auto dot = report_path.rfind('.');
  if (dot != std::string::npos) report_path.resize(dot);
  report_path += ".buckling.json";

  write_file_atomic(out, sweep_csv(curve));
  write_file_atomic(report_path, buckling_json(report, source.assumed_geometry));
  std::cout << "wrote " << out << " (" << curve.samples.size() << " samples) and "
            << report_path << "\n";
  if (curve.truncated) {
    std::cerr << "vjmstiff: " << curve.failure << "\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int run_map(const ChainSource& source, const std::string& grid_spec,
            const std::string& points_spec, const Vector6* direction,
            const SolverFlags& flags, const std::string& out, int threads) {
  const ChainModel& chain = source.chain;
  if (grid_spec.empty() == points_spec.empty())
    throw std::runtime_error("map: need exactly one of --grid or --points");

  // Assemble the point list: either joint-space points or a grid over joint
  // or Cartesian axes.
  std::vector<std::string> axis_names;
  std::vector<VectorX> points;
  bool cartesian = false;
  if (!points_spec.empty()) {
    for (int i = 0; i < chain.passive_count; ++i)
      axis_names.push_back("q" + std::to_string(i));
    std::stringstream ss(points_spec);
    std::string part;
    while (std::getline(ss, part, ';')) {
      if (part.empty()) continue;
      std::stringstream ps(part);
      std::string item;
      std::vector<double> values;
      while (std::getline(ps, item, ',')) values.push_back(std::stod(item));
      if (static_cast<int>(values.size()) != chain.passive_count)
        throw std::runtime_error("map: point needs " +
                                 std::to_string(chain.passive_count) +
                                 " joint values");
      points.push_back(Eigen::Map<VectorX>(values.data(), values.size()));
    }
  } else {
    const std::vector<MapAxis> axes = parse_grid(grid_spec);
    cartesian = cartesian_axis_index(axes.front().name) >= 0;
    for (const MapAxis& a : axes) {
      const bool axis_cartesian = cartesian_axis_index(a.name) >= 0;
      if (axis_cartesian != cartesian)
        throw std::runtime_error("map: cannot mix joint and Cartesian axes");
      if (!axis_cartesian &&
          (a.name.size() < 2 || a.name[0] != 'q' ||
           std::stoi(a.name.substr(1)) >= chain.passive_count))
        throw std::runtime_error("map: unknown axis '" + a.name + "'");
      axis_names.push_back(a.name);
    }
    std::vector<int> index(axes.size(), 0);
    while (true) {
      VectorX point(axes.size());
      for (size_t k = 0; k < axes.size(); ++k) {
        const MapAxis& a = axes[k];
        point[k] = a.count == 1
                       ? a.lo
                       : a.lo + (a.hi - a.lo) * index[k] / (a.count - 1);
      }
      points.push_back(point);
      size_t k = 0;
      for (; k < axes.size(); ++k) {
        if (++index[k] < axes[k].count) break;
        index[k] = 0;
      }
      if (k == axes.size()) break;
    }
  }

  std::vector<std::string> rows(points.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      std::ostringstream os;
      for (int k = 0; k < points[i].size(); ++k)
        os << format_real(points[i][k]) << ',';
      try {
        StiffnessResult stiffness;
        if (!points_spec.empty() || !cartesian) {
          // Joint-space point: unloaded stiffness at that configuration.
          VectorX q = source.q0;
          if (!points_spec.empty()) {
            q = points[i];
          } else {
            for (size_t k = 0; k < axis_names.size(); ++k)
              q[std::stoi(axis_names[k].substr(1))] = points[i][k];
          }
          stiffness = stiffness_unloaded(chain, q);
        } else {
          Vector6 offset = Vector6::Zero();
          for (size_t k = 0; k < axis_names.size(); ++k)
            offset[cartesian_axis_index(axis_names[k])] = points[i][k];
          const VectorX theta0 = VectorX::Zero(chain.spring_count);
          const Pose unloaded = forward_kinematics(chain, source.q0, theta0);
          SolverSettings per_point = flags.settings();
          per_point.rng_seed = flags.seed + i;
          const EquilibriumState state = solve_equilibrium(
              chain, apply_twist(unloaded, offset), source.q0, theta0, per_point);
          if (!state.converged) throw std::runtime_error(state.message);
          stiffness = stiffness_loaded(chain, state);
        }
        for (int k = 0; k < 6; ++k)
          os << format_real(stiffness.eigenvalues[k]) << ',';
        if (direction != nullptr)
          os << format_real(directional_stiffness(stiffness, *direction)) << ',';
        os << (stiffness.critical ? 1 : 0) << ','
           << (stiffness.singular ? 1 : 0) << ",ok";
      } catch (const std::exception& e) {
        for (int k = 0; k < 6 + (direction != nullptr ? 1 : 0); ++k) os << "nan,";
        os << "0,0,failed";
        log_line(1, std::string("map point failed: ") + e.what());
      }
      rows[i] = os.str();
    }
  };
  const int worker_count =
      std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < worker_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::ostringstream os;
  for (const std::string& name : axis_names) os << name << ',';
  os << "k_eig1,k_eig2,k_eig3,k_eig4,k_eig5,k_eig6,";
  if (direction != nullptr) os << "k_dir,";
  os << "critical_flag,singular_flag,status\n";
  for (const std::string& row : rows) os << row << '\n';
  emit(out, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual-joint stiffness analysis for manipulator chains"};
  app.require_subcommand(1);

  std::string chain_file, posture, out, format = "json";
  std::string offset_text, direction_text, grid_spec, points_spec;
  double dmax_mm = 4.0, step_mm = 0.01;
  bool paper_step = false;
  int threads = 1;
  SolverFlags flags;

  auto add_chain_flags = [&](CLI::App* cmd) {
    cmd->add_option("--chain", chain_file, "chain description file (JSON)");
    cmd->add_option("--posture", posture,
                    "built-in Orthoglide leg posture (A|B|C|D)");
  };

  CLI::App* validate = app.add_subcommand(
      "validate", "parse a chain and report its coordinate counts and spectrum");
  add_chain_flags(validate);

  CLI::App* equilibrium = app.add_subcommand(
      "equilibrium", "solve one loaded equilibrium and its stiffness");
  add_chain_flags(equilibrium);
  equilibrium->add_option("--offset", offset_text,
                          "pose offset from the unloaded pose: x,y,z,rx,ry,rz "
                          "(m, rad)")
      ->required();
  equilibrium->add_option("--out", out, "output path (stdout when omitted)");
  equilibrium->add_option("--format", format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  add_solver_flags(equilibrium, flags);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "displacement sweep with force, tangent stiffness and buckling report");
  add_chain_flags(sweep);
  sweep->add_option("--direction", direction_text,
                    "unit sweep direction x,y,z,rx,ry,rz (default: axial "
                    "compression -x)");
  sweep->add_option("--dmax", dmax_mm, "sweep range in mm (default 4)");
  sweep->add_option("--step", step_mm, "sweep step in mm (default 0.01)");
  sweep->add_flag("--paper-step", paper_step, "use the 0.001 mm step");
  sweep->add_option("--out", out, "output CSV path (required)")->required();
  add_solver_flags(sweep, flags);

  CLI::App* map_cmd = app.add_subcommand(
      "map", "per-point stiffness spectra over a joint or Cartesian grid");
  add_chain_flags(map_cmd);
  map_cmd->add_option("--grid", grid_spec,
                      "axes spec name=lo:hi:count;... (q0..qN or x,y,z,rx,ry,rz)");
  map_cmd->add_option("--points", points_spec,
                      "explicit joint-space points p1,p2,..;q1,q2,..");
  map_cmd->add_option("--direction", direction_text,
                      "also report directional stiffness along this unit "
                      "6-vector");
  map_cmd->add_option("--out", out, "output CSV path (stdout when omitted)");
  map_cmd->add_option("--threads", threads, "worker threads (default 1)");
  add_solver_flags(map_cmd, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return run_validate(chain_file, posture);

    const ChainSource source = resolve_chain(chain_file, posture);
    if (app.got_subcommand(equilibrium)) {
      return run_equilibrium(source, parse_vector6(offset_text, "--offset"),
                             flags, out, format);
    }
    if (app.got_subcommand(sweep)) {
      Vector6 direction = orthoglide_default_direction();
      if (!direction_text.empty())
        direction = parse_vector6(direction_text, "--direction");
      const double step = (paper_step ? 0.001 : step_mm) * 1e-3;
      return run_sweep(source, direction, dmax_mm * 1e-3, step, flags, out);
    }
    if (app.got_subcommand(map_cmd)) {
      Vector6 direction;
      const bool has_direction = !direction_text.empty();
      if (has_direction) direction = parse_vector6(direction_text, "--direction");
      return run_map(source, grid_spec, points_spec,
                     has_direction ? &direction : nullptr, flags, out, threads);
    }
  } catch (const ChainParseError& e) {
    std::cerr << "vjmstiff: parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "vjmstiff: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
