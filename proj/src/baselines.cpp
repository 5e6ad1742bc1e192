#include "squeeze/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "squeeze/rng.hpp"
#include "squeeze/stroke_eval.hpp"

namespace squeeze::baselines {

namespace {
constexpr std::uint64_t kWfDispense = 0x57464449ull;
constexpr std::uint64_t kWfSensor = 0x57465345ull;

// Kalman pass over the full 100 Hz reading series; returns the dispensed-mass
// estimate per sample (reference taken at the end of the warm-up window).
std::vector<double> kalman_dispensed(const std::vector<double>& readings_g, const Config& cfg) {
  KalmanState st;
  st.process_noise_q = cfg.kalman_process_noise_g2;
  st.measurement_noise_r = cfg.kalman_measurement_noise_g2;
  st.estimate = readings_g.front();
  st.variance = cfg.kalman_measurement_noise_g2;

  const std::size_t warmup =
      static_cast<std::size_t>(std::lround(cfg.wf_warmup_s * cfg.ft_rate_hz));
  std::vector<double> weight_est(readings_g.size());
  for (std::size_t i = 0; i < readings_g.size(); ++i) {
    st = kalman_step(st, readings_g[i]);
    weight_est[i] = st.estimate;
  }
  const double ref = weight_est[std::min(warmup, weight_est.size() - 1)];
  std::vector<double> dispensed(readings_g.size());
  for (std::size_t i = 0; i < readings_g.size(); ++i) dispensed[i] = ref - weight_est[i];
  return dispensed;
}

}  // namespace

KalmanState kalman_step(KalmanState state, double z) {
  if (!(state.variance > 0)) throw std::invalid_argument("kalman_step: variance must be positive");
  if (!(state.measurement_noise_r > 0))
    throw std::invalid_argument("kalman_step: r must be positive");
  state.variance += state.process_noise_q;  // random-walk predict
  const double gain = state.variance / (state.variance + state.measurement_noise_r);
  state.estimate += gain * (z - state.estimate);
  state.variance *= (1.0 - gain);
  return state;
}

curves::Curve simple_flow_curve(const sim::SqueezeProfile& profile, const Config& cfg) {
  if (profile.mode != sim::SqueezeMode::constant_rate)
    throw std::invalid_argument("simple_flow_curve: requires the constant-rate squeeze");
  const double q = profile.dv_max_ml / profile.duration_s;
  std::vector<double> kx, ky;
  const double spacing = cfg.flow_knot_spacing_s();
  for (int k = 0; k <= cfg.flow_knot_count; ++k) {
    kx.push_back(k * spacing);
    ky.push_back(q);
  }
  return curves::Curve::fit_spline(std::move(kx), std::move(ky), curves::CurveKind::flow_rate);
}

std::array<double, 2> pp_feature(const sim::LiquidSpec& liquid, const sim::BottleState& bottle) {
  return {std::log10(liquid.viscosity_cp), bottle.fill_ml};
}

WfEpisode run_wf_episode(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                         double target_mm, std::int64_t seed, const Config& cfg,
                         bool truth_speeds_for_reference) {
  if (seed < 0) throw std::invalid_argument("run_wf_episode: seed must be non-negative");
  const auto squeeze = sim::SqueezeProfile::two_stage(cfg);
  const auto dispense_seed =
      static_cast<std::int64_t>(seed_mix({static_cast<std::uint64_t>(seed), kWfDispense}) >> 1);
  const auto sensor_seed =
      static_cast<std::int64_t>(seed_mix({static_cast<std::uint64_t>(seed), kWfSensor}) >> 1);

  const auto log = sim::simulate_dispense(liquid, bottle, squeeze, dispense_seed, cfg);

  const double t0 = cfg.draw_start_s;
  const double t1 = squeeze.duration_s;
  const int n_ft = static_cast<int>(std::lround(t1 * cfg.ft_rate_hz)) + 1;
  std::vector<bool> arm_moving(static_cast<std::size_t>(n_ft), false);
  for (int i = 0; i < n_ft; ++i) {
    const double t = i / cfg.ft_rate_hz;
    arm_moving[static_cast<std::size_t>(i)] = (t >= t0 && t <= t1);
  }
  const auto readings = sim::simulate_weight_sensor(log, liquid, bottle, arm_moving,
                                                    sensor_seed, cfg);
  const auto dispensed_est = kalman_dispensed(readings, cfg);

  const auto stacking_truth = sim::true_stacking_curve(liquid, cfg);
  const double rho_star = stacking_truth.eval(target_mm);

  WfEpisode ep;
  ep.dispensed_estimate_g = dispensed_est;
  ep.profile.t_start_s = t0;
  ep.profile.t_end_s = t1;
  ep.profile.dt_s = cfg.profile_dt_s;

  const curves::Curve truth_flow = truth_speeds_for_reference
                                       ? sim::true_flow_rate_curve(liquid, bottle, squeeze, cfg)
                                       : curves::Curve{};

  const int n = static_cast<int>(std::floor((t1 - t0) / cfg.profile_dt_s + 1e-9)) + 1;
  auto est_at = [&](double t) {
    if (t <= 0.0) return 0.0;
    const std::size_t k = std::min(dispensed_est.size() - 1,
                                   static_cast<std::size_t>(std::lround(t * cfg.ft_rate_hz)));
    return dispensed_est[k];
  };
  for (int k = 0; k < n; ++k) {
    const double t = t0 + k * cfg.profile_dt_s;
    double q_ml_s;
    if (truth_speeds_for_reference) {
      q_ml_s = std::max(0.0, truth_flow.eval(t));
    } else {
      const double w = cfg.wf_diff_window_s;
      const double flow_g_s = (est_at(t) - est_at(t - w)) / w;
      q_ml_s = std::max(0.0, flow_g_s / liquid.density_g_per_ml);
    }
    const auto v = pipeline::drawing_speed(q_ml_s, rho_star, cfg);
    if (v.clamped) ep.profile.clamps.push_back({t, q_ml_s / rho_star, v.v_cm_s});
    ep.profile.speeds_cm_s.push_back(v.v_cm_s);
  }
  for (int k = 0; k + 1 < n; ++k)
    ep.profile.planned_arclength_cm += ep.profile.speeds_cm_s[static_cast<std::size_t>(k)] *
                                       cfg.profile_dt_s;

  ep.stroke.rho = stroke_eval::deposit(ep.profile, log, cfg.stroke_path_length_cm, cfg);
  ep.stroke.thickness = stroke_eval::thickness_profile(ep.stroke.rho, stacking_truth);
  ep.stroke.metrics = stroke_eval::stroke_metrics(ep.stroke.thickness, target_mm, cfg);
  ep.stroke.target_mm = target_mm;
  return ep;
}

curves::Curve wf_flow_estimate(const sim::LiquidSpec& liquid, const sim::BottleState& bottle,
                               std::int64_t seed, const Config& cfg) {
  if (seed < 0) throw std::invalid_argument("wf_flow_estimate: seed must be non-negative");
  const auto squeeze = sim::SqueezeProfile::two_stage(cfg);
  const auto dispense_seed =
      static_cast<std::int64_t>(seed_mix({static_cast<std::uint64_t>(seed), kWfDispense, 7}) >> 1);
  const auto sensor_seed =
      static_cast<std::int64_t>(seed_mix({static_cast<std::uint64_t>(seed), kWfSensor, 7}) >> 1);

  const auto log = sim::simulate_dispense(liquid, bottle, squeeze, dispense_seed, cfg);
  const int n_ft = static_cast<int>(std::lround(squeeze.duration_s * cfg.ft_rate_hz)) + 1;
  // arm holds still for the measurement-only protocol
  std::vector<bool> arm_moving(static_cast<std::size_t>(n_ft), false);
  const auto readings = sim::simulate_weight_sensor(log, liquid, bottle, arm_moving,
                                                    sensor_seed, cfg);
  const auto dispensed_est = kalman_dispensed(readings, cfg);

  auto est_at = [&](double t) {
    t = std::max(0.0, std::min(t, squeeze.duration_s));
    const std::size_t k = std::min(dispensed_est.size() - 1,
                                   static_cast<std::size_t>(std::lround(t * cfg.ft_rate_hz)));
    return dispensed_est[k];
  };

  std::vector<double> kx, ky;
  kx.push_back(0.0);
  ky.push_back(0.0);
  const double spacing = cfg.flow_knot_spacing_s();
  for (int k = 1; k <= cfg.flow_knot_count; ++k) {
    const double t = k * spacing;
    const double half = 0.5;
    const double flow_g_s = (est_at(t + half) - est_at(t - half)) / (2.0 * half);
    ky.push_back(std::max(0.0, flow_g_s / liquid.density_g_per_ml));
    kx.push_back(t);
  }
  return curves::Curve::fit_spline(std::move(kx), std::move(ky), curves::CurveKind::flow_rate);
}

}  // namespace squeeze::baselines
