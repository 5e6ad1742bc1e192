#pragma once

#include <array>
#include <cstdint>

#include "squeeze/config.hpp"
#include "squeeze/curves.hpp"
#include "squeeze/liquid_sim.hpp"
#include "squeeze/pipeline.hpp"

namespace squeeze::baselines {

// Scalar random-walk Kalman filter used by the weight-feedback baseline.
struct KalmanState {
  double estimate = 0.0;
  double variance = 1e6;
  double process_noise_q = 0.25;    // g^2 per step
  double measurement_noise_r = 100.0;  // g^2, matches the 10 g sensor sigma
};

KalmanState kalman_step(KalmanState state, double z);

// Simple baseline: assumes the bottle volume reduction equals the dispensed
// volume, so the flow is the (constant-rate) compression rate at every knot.
curves::Curve simple_flow_curve(const sim::SqueezeProfile& profile, const Config& cfg);

// Privileged 2-feature input: [log10 viscosity, fill volume].
std::array<double, 2> pp_feature(const sim::LiquidSpec& liquid, const sim::BottleState& bottle);

// Closed-loop weight-feedback episode (WF+GT): the only policy that reads
// dispensing-time measurements. Kalman-filtered wrist readings give the
// dispensed mass; its windowed derivative divided by true density gives the
// flow; ground-truth stacking supplies rho*.
struct WfEpisode {
  pipeline::SpeedProfile profile;
  stroke_eval::StrokeResult stroke;
  std::vector<double> dispensed_estimate_g;  // per 100 Hz sample
};
WfEpisode run_wf_episode(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                         double target_mm, std::int64_t seed, const Config& cfg,
                         bool truth_speeds_for_reference = false);

// WF's flow-curve estimate for the prediction benchmark: central differences
// of the Kalman dispensed estimate at the knot times, divided by density.
curves::Curve wf_flow_estimate(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                               std::int64_t seed, const Config& cfg);

}  // namespace squeeze::baselines
