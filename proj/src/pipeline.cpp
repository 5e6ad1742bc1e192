#include "squeeze/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "squeeze/rng.hpp"

namespace squeeze::pipeline {

namespace {
constexpr std::uint64_t kEpisodeExplore = 0x45504558ull;
constexpr std::uint64_t kEpisodeDispense = 0x45504449ull;
}  // namespace

double SpeedProfile::speed_at(double t) const {
  if (speeds_cm_s.empty()) throw std::logic_error("speed_at: empty profile");
  if (t <= t_start_s) return speeds_cm_s.front();
  const std::size_t k = std::min(speeds_cm_s.size() - 1,
                                 static_cast<std::size_t>((t - t_start_s) / dt_s));
  return speeds_cm_s[k];
}

PredictedCurves curves_from_outputs(std::vector<double> flow_knots,
                                    std::vector<double> stacking_knots, const Config& cfg) {
  if (static_cast<int>(flow_knots.size()) != cfg.flow_knot_count)
    throw std::invalid_argument("curves_from_outputs: wrong flow knot count");
  if (static_cast<int>(stacking_knots.size()) != cfg.stacking_knot_count)
    throw std::invalid_argument("curves_from_outputs: wrong stacking knot count");

  PredictedCurves out;
  std::vector<double> fx, fy;
  fx.push_back(0.0);
  fy.push_back(0.0);
  const double spacing = cfg.flow_knot_spacing_s();
  for (int k = 0; k < cfg.flow_knot_count; ++k) {
    fx.push_back((k + 1) * spacing);
    double v = flow_knots[static_cast<std::size_t>(k)];
    if (v < 0.0) {
      v = 0.0;
      ++out.negative_flow_knots_clamped;
    }
    fy.push_back(v);
  }
  out.flow = curves::Curve::fit_spline(std::move(fx), std::move(fy),
                                       curves::CurveKind::flow_rate);

  std::vector<double> sx(stacking_knots.size());
  for (std::size_t i = 0; i < sx.size(); ++i)
    sx[i] = cfg.stacking_knot_min_mm + (cfg.stacking_knot_max_mm - cfg.stacking_knot_min_mm) *
                                           static_cast<double>(i) /
                                           static_cast<double>(sx.size() - 1);
  out.stacking = curves::Curve::fit_spline(std::move(sx), std::move(stacking_knots),
                                           curves::CurveKind::stacking);
  return out;
}

PredictedCurves predict_curves(const haptics::LiquidFeature& feature,
                               const nn::MlpModel& flow_model,
                               const nn::MlpModel& stacking_model, const Config& cfg) {
  const auto x = feature.as_vector();
  if (static_cast<int>(x.size()) != flow_model.in_dim() ||
      static_cast<int>(x.size()) != stacking_model.in_dim())
    throw std::invalid_argument("predict_curves: feature/model dimension mismatch");
  return curves_from_outputs(flow_model.forward(x), stacking_model.forward(x), cfg);
}

ClampedSpeed drawing_speed(double q_ml_s, double rho_ml_cm, const Config& cfg) {
  if (!(rho_ml_cm > 0)) throw std::domain_error("drawing_speed: rho must be positive");
  if (q_ml_s < 0) throw std::invalid_argument("drawing_speed: negative flow");
  const double raw = q_ml_s / rho_ml_cm;
  if (raw < cfg.speed_min_cm_s) return {cfg.speed_min_cm_s, true};
  if (raw > cfg.speed_max_cm_s) return {cfg.speed_max_cm_s, true};
  return {raw, false};
}

SpeedProfile plan_speed_profile(const curves::Curve& flow, const curves::Curve* stacking,
                                Target target, double t_start_s, double t_end_s,
                                const Config& cfg) {
  if (!(t_end_s > t_start_s)) throw std::invalid_argument("plan_speed_profile: empty window");
  if (t_start_s < flow.x_min() - 1e-9 || t_end_s > flow.x_max() + 1e-9)
    throw std::invalid_argument("plan_speed_profile: window outside the flow curve domain");

  double rho_star;
  if (target.kind == Target::Kind::thickness_mm) {
    if (stacking == nullptr)
      throw std::invalid_argument("plan_speed_profile: thickness target needs a stacking curve");
    if (target.value < cfg.stacking_knot_min_mm || target.value > cfg.stacking_knot_max_mm)
      throw std::domain_error("outside stacking domain");
    if (!stacking->strictly_monotone())
      throw std::domain_error("plan_speed_profile: stacking curve not strictly monotone");
    rho_star = stacking->eval(target.value);
  } else {
    rho_star = target.value;
  }
  if (!(rho_star > 0)) throw std::domain_error("plan_speed_profile: non-positive rho*");

  SpeedProfile p;
  p.t_start_s = t_start_s;
  p.t_end_s = t_end_s;
  p.dt_s = cfg.profile_dt_s;
  const int n = static_cast<int>(std::floor((t_end_s - t_start_s) / p.dt_s + 1e-9)) + 1;
  p.speeds_cm_s.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = t_start_s + k * p.dt_s;
    const double q = std::max(0.0, flow.eval(t));
    const auto v = drawing_speed(q, rho_star, cfg);
    if (v.clamped) p.clamps.push_back({t, q / rho_star, v.v_cm_s});
    p.speeds_cm_s.push_back(v.v_cm_s);
  }
  for (int k = 0; k + 1 < n; ++k) p.planned_arclength_cm += p.speeds_cm_s[k] * p.dt_s;
  return p;
}

namespace {

EpisodeResult execute_episode(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                              PredictedCurves planned, const sim::SqueezeProfile& squeeze,
                              double target_mm, std::int64_t seed, const Config& cfg) {
  EpisodeResult ep;
  ep.target_mm = target_mm;
  ep.negative_flow_knots_clamped = planned.negative_flow_knots_clamped;

  const double t0 = cfg.draw_start_s;
  const double t1 = squeeze.duration_s;
  ep.profile = plan_speed_profile(planned.flow, &planned.stacking,
                                  Target::thickness(target_mm), t0, t1, cfg);
  ep.rho_star_ml_cm = planned.stacking.eval(target_mm);
  ep.flow_used = std::move(planned.flow);
  ep.stacking_used = std::move(planned.stacking);

  // dispensing happens only after the plan is fixed: fully open loop
  const auto dispense_seed =
      static_cast<std::int64_t>(seed_mix({static_cast<std::uint64_t>(seed), kEpisodeDispense}) >> 1);
  const auto log = sim::simulate_dispense(liquid, bottle, squeeze, dispense_seed, cfg);

  ep.stroke.rho = stroke_eval::deposit(ep.profile, log, cfg.stroke_path_length_cm, cfg);
  const auto stacking_truth = sim::true_stacking_curve(liquid, cfg);
  ep.stroke.thickness = stroke_eval::thickness_profile(ep.stroke.rho, stacking_truth);
  ep.stroke.metrics = stroke_eval::stroke_metrics(ep.stroke.thickness, target_mm, cfg);
  ep.stroke.target_mm = target_mm;
  return ep;
}

}  // namespace

EpisodeResult run_episode(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                          const nn::MlpModel& flow_model, const nn::MlpModel& stacking_model,
                          double target_mm, std::int64_t seed, const Config& cfg) {
  if (seed < 0) throw std::invalid_argument("run_episode: seed must be non-negative");
  const auto explore_seed =
      static_cast<std::int64_t>(seed_mix({static_cast<std::uint64_t>(seed), kEpisodeExplore}) >> 1);
  const auto trace = sim::simulate_exploration(liquid, bottle, explore_seed, cfg);
  const double weight = bottle.bottle_mass_g + bottle.fill_ml * liquid.density_g_per_ml;
  const auto feature = haptics::extract_feature(trace, weight, cfg);
  auto planned = predict_curves(feature, flow_model, stacking_model, cfg);
  return execute_episode(liquid, bottle, std::move(planned),
                         sim::SqueezeProfile::two_stage(cfg), target_mm, seed, cfg);
}

EpisodeResult run_episode_truth(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                                double target_mm, std::int64_t seed, const Config& cfg) {
  if (seed < 0) throw std::invalid_argument("run_episode_truth: seed must be non-negative");
  const auto squeeze = sim::SqueezeProfile::two_stage(cfg);
  PredictedCurves truth;
  truth.flow = sim::true_flow_rate_curve(liquid, bottle, squeeze, cfg);
  truth.stacking = sim::true_stacking_curve(liquid, cfg);
  return execute_episode(liquid, bottle, std::move(truth), squeeze, target_mm, seed, cfg);
}

EpisodeResult run_episode_with_curves(const sim::LiquidSpec& liquid,
                                      const sim::BottleState& bottle,
                                      const curves::Curve& flow_for_plan,
                                      const curves::Curve& stacking_for_plan,
                                      const sim::SqueezeProfile& squeeze, double target_mm,
                                      std::int64_t seed, const Config& cfg) {
  if (seed < 0) throw std::invalid_argument("run_episode_with_curves: seed must be non-negative");
  PredictedCurves planned;
  planned.flow = flow_for_plan;
  planned.stacking = stacking_for_plan;
  return execute_episode(liquid, bottle, std::move(planned), squeeze, target_mm, seed, cfg);
}

std::string episode_report_json(const EpisodeResult& ep) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "episode-report";
  j["target_mm"] = ep.target_mm;
  j["rho_star_ml_cm"] = ep.rho_star_ml_cm;
  j["flow_knot_x"] = ep.flow_used.knot_x();
  j["flow_knot_y"] = ep.flow_used.knot_y();
  j["stacking_knot_x"] = ep.stacking_used.knot_x();
  j["stacking_knot_y"] = ep.stacking_used.knot_y();
  j["negative_flow_knots_clamped"] = ep.negative_flow_knots_clamped;
  j["profile"] = {{"t_start_s", ep.profile.t_start_s},
                  {"t_end_s", ep.profile.t_end_s},
                  {"dt_s", ep.profile.dt_s},
                  {"speeds_cm_s", ep.profile.speeds_cm_s},
                  {"planned_arclength_cm", ep.profile.planned_arclength_cm}};
  nlohmann::json clamps = nlohmann::json::array();
  for (const auto& c : ep.profile.clamps)
    clamps.push_back({{"t_s", c.t_s}, {"raw_cm_s", c.raw_cm_s}, {"clamped_cm_s", c.clamped_cm_s}});
  j["clamp_events"] = clamps;
  j["metrics"] = {{"mean_abs_error_mm", ep.stroke.metrics.mean_abs_error_mm},
                  {"std_dev_mm", ep.stroke.metrics.std_dev_mm},
                  {"pct_error", ep.stroke.metrics.pct_error},
                  {"pct_variance", ep.stroke.metrics.pct_variance},
                  {"cells_used", ep.stroke.metrics.cells_used},
                  {"clamped_cells", ep.stroke.thickness.clamped_cells}};
  j["rho_actual_ml_cm"] = ep.stroke.rho.rho_ml_cm;
  j["thickness_mm"] = ep.stroke.thickness.mm;
  return j.dump(2) + "\n";
}

}  // namespace squeeze::pipeline
