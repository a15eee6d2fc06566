#include "vjmstiff/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace vjm {

std::string format_real(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string sweep_csv(const SweepCurve& curve) {
  std::ostringstream os;
  os << "delta_m,force_n,tangent_n_per_m,iterations,restarts,critical_flag\n";
  for (const SweepSample& s : curve.samples) {
    os << format_real(s.delta) << ',' << format_real(s.force) << ','
       << format_real(s.tangent) << ',' << s.iterations << ',' << s.restarts
       << ',' << (s.critical ? 1 : 0) << '\n';
  }
  return os.str();
}

namespace {

std::string json_matrix4(const Transform& t) {
  std::ostringstream os;
  os << '[';
  for (int r = 0; r < 4; ++r) {
    os << '[';
    for (int c = 0; c < 4; ++c)
      os << format_real(t(r, c)) << (c < 3 ? "," : "");
    os << ']' << (r < 3 ? "," : "");
  }
  os << ']';
  return os.str();
}

std::string json_vector(const Eigen::Ref<const VectorX>& v) {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < v.size(); ++i)
    os << format_real(v[i]) << (i + 1 < v.size() ? "," : "");
  os << ']';
  return os.str();
}

}  // namespace

std::string buckling_json(
    const BucklingReport& report,
    const std::optional<OrthoglideGeometry>& assumed_geometry) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"detected\": " << (report.detected ? "true" : "false") << ",\n";
  os << "  \"K0\": " << format_real(report.k0) << ",\n";
  os << "  \"K1\": " << format_real(report.k1) << ",\n";
  os << "  \"F_cr\": " << format_real(report.f_cr) << ",\n";
  os << "  \"delta_cr\": " << format_real(report.delta_cr) << ",\n";
  os << "  \"K2\": " << format_real(report.k2) << ",\n";
  os << "  \"F1\": " << format_real(report.f1) << ",\n";
  os << "  \"delta_1\": " << format_real(report.delta1) << ",\n";
  os << "  \"K3\": " << format_real(report.k3) << ",\n";
  os << "  \"critical_index\": " << report.critical_index << ",\n";
  os << "  \"eigenvalue_index\": " << report.eigenvalue_index << ",\n";
  if (assumed_geometry) {
    const OrthoglideGeometry& g = *assumed_geometry;
    os << "  \"assumed_geometry\": {\n";
    os << "    \"bar_length_m\": " << format_real(g.bar_length) << ",\n";
    os << "    \"actuator_stiffness_n_per_m\": "
       << format_real(g.actuator_stiffness) << ",\n";
    os << "    \"actuator_position_m\": " << format_real(g.actuator_position)
       << ",\n";
    os << "    \"base\": " << json_matrix4(g.base) << ",\n";
    os << "    \"tool\": " << json_matrix4(g.tool) << ",\n";
    os << "    \"note\": \"bar length, frames and actuator stiffness are "
          "assumed, not published\"\n";
    os << "  }\n";
  } else {
    os << "  \"assumed_geometry\": null\n";
  }
  os << "}\n";
  return os.str();
}

std::string equilibrium_json(const EquilibriumState& state,
                             const StiffnessResult& stiffness) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"converged\": " << (state.converged ? "true" : "false") << ",\n";
  os << "  \"stable\": " << (state.stable ? "true" : "false") << ",\n";
  os << "  \"iterations\": " << state.iterations << ",\n";
  os << "  \"restarts\": " << state.restarts << ",\n";
  os << "  \"residual_pose\": " << format_real(state.residual_pose) << ",\n";
  os << "  \"residual_static\": " << format_real(state.residual_static) << ",\n";
  os << "  \"q\": " << json_vector(state.q) << ",\n";
  os << "  \"theta\": " << json_vector(state.theta) << ",\n";
  os << "  \"F\": " << json_vector(state.wrench) << ",\n";
  os << "  \"position\": " << json_vector(Eigen::Vector3d(state.pose.position))
     << ",\n";
  if (!state.message.empty()) os << "  \"message\": \"" << state.message << "\",\n";
  os << "  \"K\": [";
  for (int r = 0; r < 6; ++r) {
    os << '[';
    for (int c = 0; c < 6; ++c)
      os << format_real(stiffness.stiffness(r, c)) << (c < 5 ? "," : "");
    os << ']' << (r < 5 ? "," : "");
  }
  os << "],\n";
  os << "  \"K_eigenvalues\": " << json_vector(VectorX(stiffness.eigenvalues))
     << ",\n";
  os << "  \"spring_block_min_eig\": "
     << format_real(stiffness.spring_block_min_eig) << ",\n";
  os << "  \"asymmetry\": " << format_real(stiffness.asymmetry) << ",\n";
  os << "  \"critical\": " << (stiffness.critical ? "true" : "false") << ",\n";
  os << "  \"singular\": " << (stiffness.singular ? "true" : "false") << "\n";
  os << "}\n";
  return os.str();
}

bool log_enabled(int level) {
  static const int configured = [] {
    const char* env = std::getenv("VJMSTIFF_LOG");
    if (env == nullptr || *env == '\0') return 0;
    const std::string v(env);
    if (v == "debug" || v == "2") return 2;
    if (v == "info" || v == "1") return 1;
    return 0;
  }();
  return configured >= level;
}

void log_line(int level, const std::string& message) {
  if (log_enabled(level)) std::cerr << "[vjmstiff] " << message << "\n";
}

}  // namespace vjm
