#pragma once

#include "vjmstiff/harness.hpp"
#include "vjmstiff/orthoglide.hpp"
#include "vjmstiff/stiffness.hpp"

#include <optional>
#include <string>

namespace vjm {

/// Shortest exact decimal at 17 significant digits; round-trips losslessly.
std::string format_real(double value);

/// Writes via a temporary file and rename, so readers never see partial data.
void write_file_atomic(const std::string& path, const std::string& content);

/// CSV with header delta_m,force_n,tangent_n_per_m,iterations,restarts,critical_flag.
std::string sweep_csv(const SweepCurve& curve);

std::string buckling_json(const BucklingReport& report,
                          const std::optional<OrthoglideGeometry>& assumed_geometry);

std::string equilibrium_json(const EquilibriumState& state,
                             const StiffnessResult& stiffness);

/// Log helper driven by the VJMSTIFF_LOG environment variable
/// (unset/empty: silent; "info"; "debug"). Messages go to stderr.
bool log_enabled(int level);  // 1 = info, 2 = debug
void log_line(int level, const std::string& message);

}  // namespace vjm
