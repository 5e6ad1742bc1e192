#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "squeeze/config.hpp"
#include "squeeze/curves.hpp"
#include "squeeze/haptics.hpp"
#include "squeeze/liquid_sim.hpp"
#include "squeeze/neuralnet.hpp"
#include "squeeze/stroke_eval.hpp"

namespace squeeze::pipeline {

struct ClampEvent {
  double t_s;
  double raw_cm_s;
  double clamped_cm_s;
};

// Zero-order-hold drawing-speed schedule over the squeeze window.
struct SpeedProfile {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double dt_s = 0.05;
  std::vector<double> speeds_cm_s;  // sample k at t_start + k*dt
  std::vector<ClampEvent> clamps;
  double planned_arclength_cm = 0.0;

  double speed_at(double t) const;  // ZOH lookup, clamped to the window
};

struct PredictedCurves {
  curves::Curve flow;
  curves::Curve stacking;
  int negative_flow_knots_clamped = 0;
};

// Forward passes through both models; negative predicted flow knots are
// clamped to zero and counted.
PredictedCurves predict_curves(const haptics::LiquidFeature& feature,
                               const nn::MlpModel& flow_model,
                               const nn::MlpModel& stacking_model, const Config& cfg);

// Builds curves straight from model outputs (used by the privileged PP
// baseline whose inputs are not a LiquidFeature).
PredictedCurves curves_from_outputs(std::vector<double> flow_knots,
                                    std::vector<double> stacking_knots, const Config& cfg);

struct ClampedSpeed {
  double v_cm_s;
  bool clamped;
};

// v = q / rho, clamped to [speed_min, speed_max].
ClampedSpeed drawing_speed(double q_ml_s, double rho_ml_cm, const Config& cfg);

struct Target {
  enum class Kind { thickness_mm, rho_ml_cm } kind;
  double value;
  static Target thickness(double mm) { return {Kind::thickness_mm, mm}; }
  static Target rho(double ml_cm) { return {Kind::rho_ml_cm, ml_cm}; }
};

// rho* from the stacking curve (or given directly), then
// v(t) = clamp(flow(t)/rho*) sampled every profile_dt over [t_start, t_end].
SpeedProfile plan_speed_profile(const curves::Curve& flow, const curves::Curve* stacking,
                                Target target, double t_start_s, double t_end_s,
                                const Config& cfg);

struct EpisodeResult {
  curves::Curve flow_used;      // the curve the plan was computed from
  curves::Curve stacking_used;  // rho* source (predicted or ground truth)
  double rho_star_ml_cm = 0.0;
  double target_mm = 0.0;
  SpeedProfile profile;
  stroke_eval::StrokeResult stroke;
  int negative_flow_knots_clamped = 0;
};

// Full open-loop episode: exploration -> feature -> predicted curves ->
// speed profile -> deposit over a straight path, judged against simulator
// truth. The plan is computed before the dispensing run and never reads it.
EpisodeResult run_episode(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                          const nn::MlpModel& flow_model, const nn::MlpModel& stacking_model,
                          double target_mm, std::int64_t seed, const Config& cfg);

// Oracle substitution: plan from the simulator's own curves. Isolates
// control-law and evaluator error from learning error.
EpisodeResult run_episode_truth(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                                double target_mm, std::int64_t seed, const Config& cfg);

// Episode with explicitly supplied planning curves and squeeze profile.
EpisodeResult run_episode_with_curves(const sim::LiquidSpec& liquid,
                                      const sim::BottleState& bottle,
                                      const curves::Curve& flow_for_plan,
                                      const curves::Curve& stacking_for_plan,
                                      const sim::SqueezeProfile& squeeze, double target_mm,
                                      std::int64_t seed, const Config& cfg);

std::string episode_report_json(const EpisodeResult& episode);

}  // namespace squeeze::pipeline
