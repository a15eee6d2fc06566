#include "vjmstiff/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vjm {

SweepCurve displacement_sweep(const ChainModel& chain, const Pose& start_pose,
                              const Vector6& direction, double delta_max,
                              double step, const VectorX& q_start,
                              const SolverSettings& settings) {
  if (!(step > 0.0) || !(delta_max >= step))
    throw std::invalid_argument("displacement_sweep: need 0 < step <= delta_max");
  if (std::abs(direction.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("displacement_sweep: direction must be a unit 6-vector");

  SweepCurve curve;
  curve.direction = direction;
  curve.step = step;
  const int count = static_cast<int>(std::floor(delta_max / step + 0.5)) + 1;
  curve.samples.reserve(count);

  VectorX q = q_start;
  VectorX theta = VectorX::Zero(chain.spring_count);
  SolverSettings per_step = settings;
  for (int i = 0; i < count; ++i) {
    const double delta = i * step;
    const Pose target = apply_twist(start_pose, Vector6(delta * direction));
    per_step.rng_seed = settings.rng_seed + static_cast<std::uint64_t>(i);
    const EquilibriumState state =
        solve_equilibrium(chain, target, q, theta, per_step);
    if (!state.converged) {
      curve.truncated = true;
      curve.failure = "solver failed at delta = " + std::to_string(delta) +
                      ": " + state.message;
      break;
    }
    const StiffnessResult stiffness =
        stiffness_loaded(chain, state, settings.hessian_step);

    SweepSample sample;
    sample.delta = delta;
    sample.force = direction.dot(state.wrench);
    sample.tangent = directional_stiffness(stiffness, direction);
    sample.iterations = state.iterations;
    sample.restarts = state.restarts;
    sample.critical = stiffness.critical;
    sample.singular = stiffness.singular;
    sample.spring_block_min_eig = stiffness.spring_block_min_eig;
    sample.stability_margin =
        std::isnan(state.stability_margin)
            ? stability_margin(chain, state.q, state.theta, state.wrench,
                               settings.hessian_step)
            : state.stability_margin;
    sample.state = state;
    curve.samples.push_back(std::move(sample));

    q = state.q;
    theta = state.theta;
  }
  return curve;
}

namespace {

// Linear fit of y(x) over index window [first, last]; returns the x where the
// fit crosses zero, or NaN when the fit is degenerate or non-decreasing.
template <typename Getter>
double fit_zero_crossing(const SweepCurve& curve, int first, int last,
                         Getter value) {
  int count = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = first; i <= last; ++i) {
    const double x = curve.samples[i].delta;
    const double y = value(curve.samples[i]);
    if (!std::isfinite(y)) return std::nan("");
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++count;
  }
  if (count < 2) return std::nan("");
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) return std::nan("");
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;
  if (slope >= 0.0) return std::nan("");
  return -intercept / slope;
}

double force_at(const SweepCurve& curve, double delta) {
  const auto& s = curve.samples;
  if (delta <= s.front().delta) return s.front().force;
  for (size_t i = 1; i < s.size(); ++i) {
    if (s[i].delta >= delta) {
      const double w = (delta - s[i - 1].delta) / (s[i].delta - s[i - 1].delta);
      return (1.0 - w) * s[i - 1].force + w * s[i].force;
    }
  }
  return s.back().force;
}

int sample_index_at(const SweepCurve& curve, double delta) {
  int best = 0;
  double best_gap = std::abs(curve.samples[0].delta - delta);
  for (size_t i = 1; i < curve.samples.size(); ++i) {
    const double gap = std::abs(curve.samples[i].delta - delta);
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

BucklingReport detect_buckling(const SweepCurve& curve, double drop_factor) {
  if (curve.samples.size() < 10)
    throw std::invalid_argument("detect_buckling: need at least 10 samples");
  if (!(drop_factor > 1.0))
    throw std::invalid_argument("detect_buckling: drop factor must exceed 1");

  const auto& s = curve.samples;
  BucklingReport report;
  report.k0 = s.front().tangent;

  // Tangent-drop heuristic locates the search window.
  int drop = -1;
  double running_max = s.front().tangent;
  for (size_t i = 1; i < s.size(); ++i) {
    if (s[i].tangent < running_max / drop_factor) {
      drop = static_cast<int>(i);
      break;
    }
    running_max = std::max(running_max, s[i].tangent);
  }
  if (drop < 0) {
    report.k1 = report.k2 = report.k3 = report.k0;
    return report;
  }

  // Authoritative check: one of the two eigenvalue signals must head to zero
  // in the window around the drop. The spring-block eigenvalue catches modes
  // carried by the virtual springs, the stability margin catches modes
  // carried by the passive joints; each is normalized by its unloaded value.
  const double spring_ref = s.front().spring_block_min_eig;
  const double margin_ref = s.front().stability_margin;
  auto spring_signal = [&](const SweepSample& smp) {
    if (!(spring_ref > 0.0) || !std::isfinite(spring_ref))
      return std::numeric_limits<double>::infinity();
    return smp.spring_block_min_eig / spring_ref;
  };
  auto margin_signal = [&](const SweepSample& smp) {
    if (!(margin_ref > 0.0) || !std::isfinite(margin_ref))
      return std::numeric_limits<double>::infinity();
    return smp.stability_margin / margin_ref;
  };
  auto combined = [&](const SweepSample& smp) {
    return std::min(spring_signal(smp), margin_signal(smp));
  };

  // An ideal bifurcation crosses zero; load-path imperfections (coupled
  // compliances) round the pitchfork into a knee where the signal bottoms
  // out low but positive, so the confirmation threshold is a deep dip rather
  // than a strict sign change. On a rounded knee the drop index also lags
  // the signal minimum, so the window reaches back to 70% of the drop delta.
  int window_lo = drop;
  while (window_lo > 0 && s[window_lo - 1].delta >= 0.7 * s[drop].delta)
    --window_lo;
  const int window_hi = std::min<int>(s.size() - 1, drop + 5);
  int eig_index = window_lo;
  double eig_min = combined(s[window_lo]);
  for (int i = window_lo; i <= window_hi; ++i) {
    if (combined(s[i]) < eig_min) {
      eig_min = combined(s[i]);
      eig_index = i;
    }
  }
  if (!(eig_min <= 0.35)) {
    report.k1 = report.k2 = report.k3 = report.k0;
    return report;
  }

  report.detected = true;
  report.critical_index = drop;
  report.eigenvalue_index = eig_index;

  // Critical point from the trend of whichever signal is collapsing, fitted
  // over the steep part of its descending flank (between 80% of the unloaded
  // value and just above the minimum, where a rounded knee flattens out);
  // this resolves the crossing below the sweep step. Falls back to the drop
  // sample.
  const bool use_margin =
      margin_signal(s[eig_index]) < spring_signal(s[eig_index]);
  auto signal_of = [&](const SweepSample& smp) {
    return use_margin ? margin_signal(smp) : spring_signal(smp);
  };
  const double floor_level = std::max(0.0, eig_min) + 0.1;
  int fit_last = eig_index;
  while (fit_last > 0 && signal_of(s[fit_last]) < floor_level) --fit_last;
  int fit_first = fit_last;
  while (fit_first > 0 && signal_of(s[fit_first - 1]) <= 0.8) --fit_first;
  double delta_cr =
      use_margin
          ? fit_zero_crossing(curve, fit_first, fit_last,
                              [](const SweepSample& x) { return x.stability_margin; })
          : fit_zero_crossing(curve, fit_first, fit_last,
                              [](const SweepSample& x) { return x.spring_block_min_eig; });
  if (!std::isfinite(delta_cr) || delta_cr <= 0.0 ||
      delta_cr > s.back().delta)
    delta_cr = s[drop].delta;
  report.delta_cr = delta_cr;
  report.f_cr = force_at(curve, delta_cr);

  report.k1 = s[std::max(0, drop - 1)].tangent;
  report.delta1 = std::min(2.0 * report.delta_cr, s.back().delta);
  const int i1 = sample_index_at(curve, report.delta1);
  report.k3 = s[i1].tangent;
  report.f1 = s[i1].force;

  // Post-buckling tangent: the settled value over the post-critical stretch
  // up to the large-deformation point. Sample drop+1 sits mid-knee when the
  // transition is rounded, so the minimum over the window is used instead.
  double k2 = s[std::min<int>(drop + 1, s.size() - 1)].tangent;
  for (int i = drop + 1; i <= std::max(i1, drop + 1) &&
                         i < static_cast<int>(s.size());
       ++i)
    k2 = std::min(k2, s[i].tangent);
  report.k2 = k2;
  return report;
}

ChainModel pendulum_column(double axial_k, double rotational_k, double length,
                           double auxiliary_k) {
  Matrix6 base = Matrix6::Zero();
  base.diagonal() << axial_k, auxiliary_k, auxiliary_k, auxiliary_k,
      auxiliary_k, rotational_k;
  std::vector<ChainElement> elements;
  elements.push_back(el::spring(base, "base"));
  elements.push_back(el::rigid(Axis::Tx, length, "link"));
  elements.push_back(el::passive(Axis::Rz, "tip rotation release"));
  elements.push_back(el::passive(Axis::Ty, "tip lateral release"));
  return assemble_chain("pendulum-column", std::move(elements));
}

ChainModel euler_column(int segments, double flexural_rigidity, double length,
                        double axial_k, double auxiliary_k) {
  if (segments < 1)
    throw std::invalid_argument("euler_column: need at least one segment");
  const double seg_len = length / segments;
  const double seg_k = segments * flexural_rigidity / length;

  // Clamped base with the axial drive compliance; the hinges sit at segment
  // midpoints (half links at the clamp and the tip), which keeps the
  // discretization error of the critical load second order in 1/segments.
  Matrix6 base = Matrix6::Zero();
  base.diagonal() << axial_k, auxiliary_k, auxiliary_k, auxiliary_k,
      auxiliary_k, auxiliary_k;
  std::vector<ChainElement> elements;
  elements.push_back(el::spring(base, "base"));
  elements.push_back(el::rigid(Axis::Tx, 0.5 * seg_len, "segment 1"));
  for (int i = 0; i < segments; ++i) {
    elements.push_back(el::spring(Axis::Rz, seg_k,
                                  "hinge " + std::to_string(i + 1)));
    if (i + 1 < segments)
      elements.push_back(el::rigid(Axis::Tx, seg_len,
                                   "segment " + std::to_string(i + 2)));
  }
  elements.push_back(el::rigid(Axis::Tx, 0.5 * seg_len, "tip segment"));
  elements.push_back(el::passive(Axis::Rz, "tip rotation release"));
  elements.push_back(el::passive(Axis::Ty, "tip lateral release"));
  return assemble_chain("euler-column-" + std::to_string(segments),
                        std::move(elements));
}

}  // namespace vjm
