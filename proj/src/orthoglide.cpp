#include "vjmstiff/orthoglide.hpp"

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>

namespace vjm {

OrthoglidePosture parse_posture(const std::string& label) {
  if (label == "A" || label == "a") return OrthoglidePosture::A;
  if (label == "B" || label == "b") return OrthoglidePosture::B;
  if (label == "C" || label == "c") return OrthoglidePosture::C;
  if (label == "D" || label == "d") return OrthoglidePosture::D;
  throw std::invalid_argument("unknown posture '" + label + "' (expected A, B, C or D)");
}

const char* posture_name(OrthoglidePosture p) {
  switch (p) {
    case OrthoglidePosture::A: return "A";
    case OrthoglidePosture::B: return "B";
    case OrthoglidePosture::C: return "C";
    case OrthoglidePosture::D: return "D";
  }
  return "?";
}

Matrix6 orthoglide_foot_compliance_printed() {
  Matrix6 c;
  c <<  28e-5, -33e-5,     0,      0,      0, -40e-7,
       -33e-5,  41e-5,     0,      0,      0,  54e-7,
            0,      0, 19e-4, 11e-6, -15e-6,      0,
            0,      0, 11e-6, 23e-8,      0,      0,
            0,      0, -15e-6,     0,  23e-8,      0,
       -40e-7,  54e-7,     0,      0,      0,  84e-9;
  return c;
}

Matrix6 orthoglide_bar_compliance_printed() {
  // The printed y/rz coupling differs between the two symmetric slots
  // (11e-5 vs 11e-4); downstream processing symmetrizes by averaging.
  Matrix6 c;
  c << 46e-6,     0,      0,     0,      0,     0,
           0, 23e-2,      0,     0,      0, 11e-5,
           0,     0,  51e-3,     0, -24e-5,     0,
           0,     0,      0, 29e-6,      0,     0,
           0,     0, -24e-5,     0,  15e-7,     0,
           0, 11e-4,      0,     0,      0, 72e-7;
  return c;
}

Vector6 orthoglide_default_direction() {
  Vector6 d = Vector6::Zero();
  d[0] = -1.0;  // compress the leg along its drive axis
  return d;
}

namespace {

Matrix6 stiffness_from_printed_compliance(const Matrix6& printed, double factor) {
  const Matrix6 si = 0.5 * (printed + printed.transpose()) *
                     orthoglide_compliance_scale;
  return factor * si.inverse();
}

}  // namespace

OrthoglideChain orthoglide_chain(OrthoglidePosture posture,
                                 const OrthoglideGeometry& geometry) {
  const Matrix6 foot_k =
      stiffness_from_printed_compliance(orthoglide_foot_compliance_printed(), 1.0);
  // Parallelogram modeled as one bar with double stiffness.
  const Matrix6 bar_k =
      stiffness_from_printed_compliance(orthoglide_bar_compliance_printed(), 2.0);

  // Buckling layout: the link spring sits between the wrist joints and the
  // tool plate, so its translational coordinates deflect in the
  // (orientation-preserved) tool frame. This is what lets the compressed bar
  // shed load by shearing sideways; placing the spring on the bar side of
  // the wrist (PostureOrdering layout) keeps its lateral compliance out of
  // the load path at tilted postures instead, at the price of a clamped
  // chain that is unconditionally stable.
  std::vector<ChainElement> elements;
  elements.push_back(el::rigid(geometry.base, "base"));
  elements.push_back(
      el::actuated(Axis::Tx, geometry.actuator_position, "drive"));
  elements.push_back(
      el::spring(Axis::Tx, geometry.actuator_stiffness, "actuator"));
  elements.push_back(el::spring(foot_k, "foot"));
  if (geometry.layout == OrthoglideLayout::Buckling) {
    elements.push_back(el::passive(Axis::Ry, "q1"));
    elements.push_back(el::passive(Axis::Rz, "q2"));
    elements.push_back(el::rigid(Axis::Tx, geometry.bar_length, "bar"));
    elements.push_back(el::passive(Axis::Rz, "q3"));
    elements.push_back(el::passive(Axis::Ry, "q4"));
    elements.push_back(el::spring(bar_k, "link"));
  } else {
    elements.push_back(el::passive(Axis::Rz, "q1"));
    elements.push_back(el::passive(Axis::Ry, "q2"));
    elements.push_back(el::rigid(Axis::Tx, geometry.bar_length, "bar"));
    elements.push_back(el::spring(bar_k, "link"));
    elements.push_back(el::passive(Axis::Ry, "q3"));
    elements.push_back(el::passive(Axis::Rz, "q4"));
  }
  elements.push_back(el::rigid(geometry.tool, "tool"));

  OrthoglideChain leg;
  leg.chain = assemble_chain(
      std::string("orthoglide-") + posture_name(posture), std::move(elements));
  leg.geometry = geometry;
  leg.posture = posture;

  const double pi6 = std::numbers::pi / 6.0;
  leg.q0 = VectorX::Zero(4);
  switch (posture) {
    case OrthoglidePosture::A: break;
    case OrthoglidePosture::B: leg.q0 << 0.0, pi6, -pi6, 0.0; break;
    case OrthoglidePosture::C: leg.q0 << pi6, 0.0, 0.0, -pi6; break;
    case OrthoglidePosture::D: leg.q0 << pi6, pi6, -pi6, -pi6; break;
  }
  return leg;
}

}  // namespace vjm
