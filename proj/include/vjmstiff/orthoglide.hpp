#pragma once

#include "vjmstiff/chain.hpp"

namespace vjm {

enum class OrthoglidePosture { A, B, C, D };

OrthoglidePosture parse_posture(const std::string& label);
const char* posture_name(OrthoglidePosture p);

/// Chain layout variants. The published leg description is ambiguous about
/// where the bar/parallelogram spring sits relative to the wrist joints, and
/// the two readings reproduce different halves of the reference behaviour
/// (they are mutually exclusive; see README). `Buckling` (default) places
/// the spring between the wrist and the tool plate, so the compressed leg
/// sheds load by shearing sideways and buckles at the reference ~2.7 kN.
/// `PostureOrdering` places it on the bar side of the wrist with the
/// complementary passive-axis reading; that reproduces the reference
/// unloaded-stiffness ordering across postures (C > A > D > B) but the
/// clamped chain then has no buckling mode at any load.
enum class OrthoglideLayout { Buckling, PostureOrdering };

/// Geometry of the Orthoglide leg that the published compliance data does not
/// fix. Every default here is an assumption and is reported as such in the
/// output metadata.
struct OrthoglideGeometry {
  double bar_length = 0.31;        // m (assumed)
  double actuator_stiffness = 1e7; // N/m drive-train stiffness (assumed)
  double actuator_position = 0.0;  // locked drive coordinate, m
  Transform base = Transform::Identity();  // assumed
  Transform tool = Transform::Identity();  // assumed
  OrthoglideLayout layout = OrthoglideLayout::Buckling;
};

struct OrthoglideChain {
  ChainModel chain;
  VectorX q0;  // posture joint values
  OrthoglideGeometry geometry;
  OrthoglidePosture posture;
};

/// One leg of the Orthoglide with FEA-identified foot and bar compliances,
/// the kinematic parallelogram replaced by a single bar of doubled stiffness,
/// and the chain laid out as
///   base * Tx(drive, locked) * spring1(actuator) * spring6(foot)
///        * Ry(q1) * Rz(q2) * Tx(L) * Rz(q3) * Ry(q4) * spring6(2x bar) * tool.
/// Postures set q0 to the published joint table; springs start relaxed.
OrthoglideChain orthoglide_chain(OrthoglidePosture posture,
                                 const OrthoglideGeometry& geometry = {});

/// Published 6x6 compliance of the foot and of one parallelogram bar, as
/// printed. Translations map N -> mm equivalently kN -> m, so SI compliance
/// is these values times 1e-3 (see orthoglide_compliance_scale).
Matrix6 orthoglide_foot_compliance_printed();
Matrix6 orthoglide_bar_compliance_printed();

/// Factor converting the printed compliance values to SI (m/N, rad/(N m)).
inline constexpr double orthoglide_compliance_scale = 1e-3;

/// Default sweep/probe direction for the leg: axial compression.
Vector6 orthoglide_default_direction();

}  // namespace vjm
