#include "squeeze/liquid_sim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "squeeze/rng.hpp"

namespace squeeze::sim {

namespace {

constexpr std::uint64_t kExploreStream = 0x4558504Cull;
constexpr std::uint64_t kScaleStream = 0x5343414Cull;
constexpr std::uint64_t kSensorStream = 0x53454E53ull;

void check_seed(std::int64_t seed) {
  if (seed < 0) throw std::invalid_argument("seed must be non-negative");
}

}  // namespace

void validate(const LiquidSpec& liquid) {
  if (!(liquid.viscosity_cp >= 1.0 && liquid.viscosity_cp <= 70000.0))
    throw std::domain_error("liquid viscosity outside [1, 70000] cP");
  if (!(liquid.density_g_per_ml >= 0.8 && liquid.density_g_per_ml <= 1.5))
    throw std::domain_error("liquid density outside [0.8, 1.5] g/ml");
}

void validate(const BottleState& bottle) {
  if (!(bottle.capacity_ml > 0)) throw std::domain_error("bottle capacity must be positive");
  if (!(bottle.fill_ml >= 0 && bottle.fill_ml <= bottle.capacity_ml))
    throw std::domain_error("bottle fill outside [0, capacity]");
  if (!(bottle.bottle_mass_g >= 0)) throw std::domain_error("bottle mass must be non-negative");
}

SqueezeProfile SqueezeProfile::two_stage(const Config& cfg) {
  return {SqueezeMode::two_stage, cfg.squeeze_total_s, cfg.squeeze_dv_ml, cfg.squeeze_rapid_s,
          cfg.squeeze_rapid_fraction};
}

SqueezeProfile SqueezeProfile::constant_rate(const Config& cfg) {
  return {SqueezeMode::constant_rate, cfg.squeeze_total_s, cfg.squeeze_dv_ml,
          cfg.squeeze_rapid_s, cfg.squeeze_rapid_fraction};
}

double SqueezeProfile::compression_ml(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= duration_s) return dv_max_ml;
  if (mode == SqueezeMode::constant_rate) return dv_max_ml * t / duration_s;
  const double rapid_dv = rapid_fraction * dv_max_ml;
  if (t <= rapid_s) return rapid_dv * t / rapid_s;
  return rapid_dv + (dv_max_ml - rapid_dv) * (t - rapid_s) / (duration_s - rapid_s);
}

HapticTrace simulate_exploration(const LiquidSpec& liquid, const BottleState& bottle,
                                 std::int64_t seed, const Config& cfg) {
  validate(liquid);
  validate(bottle);
  check_seed(seed);
  if (!(bottle.fill_ml > 0)) throw std::domain_error("nothing to slosh");

  Rng rng(seed_mix({static_cast<std::uint64_t>(seed), kExploreStream}));

  const double m_liquid_kg = bottle.fill_ml * liquid.density_g_per_ml * 1e-3;
  const double m_total_kg = m_liquid_kg + bottle.bottle_mass_g * 1e-3;
  const double g = cfg.gravity_m_s2;
  const double arm = cfg.torque_arm_m;
  const double settled = m_total_kg * g * arm;

  const double amp = cfg.slosh_amp_coeff * m_liquid_kg * g * arm;
  const double fill_fraction = bottle.fill_ml / bottle.capacity_ml;
  const double f_s = cfg.slosh_freq_base_hz + cfg.slosh_freq_span_hz * (1.0 - fill_fraction);
  const double tau_d =
      cfg.slosh_tau_numerator / (cfg.slosh_tau_offset + std::log10(liquid.viscosity_cp));

  const double dt = 1.0 / cfg.haptic_rate_hz;
  const int n_rot = static_cast<int>(std::lround(cfg.rotation_duration_s * cfg.haptic_rate_hz));
  const int n_osc = static_cast<int>(std::lround(cfg.pause_duration_s * cfg.haptic_rate_hz));

  HapticTrace trace;
  trace.sample_rate_hz = cfg.haptic_rate_hz;
  trace.rotation_torque.resize(n_rot);
  trace.oscillation_torque.resize(n_osc);

  const double omega = std::numbers::pi / 2.0 / cfg.rotation_duration_s;
  for (int i = 0; i < n_rot; ++i) {
    const double t = i * dt;
    trace.rotation_torque[i] =
        m_total_kg * g * arm * std::sin(omega * t) + rng.normal(0.0, cfg.torque_noise_sigma_nm);
  }
  for (int i = 0; i < n_osc; ++i) {
    const double t = i * dt;
    trace.oscillation_torque[i] =
        settled + amp * std::exp(-t / tau_d) * std::sin(2.0 * std::numbers::pi * f_s * t) +
        rng.normal(0.0, cfg.torque_noise_sigma_nm);
  }
  return trace;
}

namespace detail {

DenseDispense integrate_dispense(const LiquidSpec& liquid, const BottleState& bottle,
                                 const SqueezeProfile& profile, const Config& cfg) {
  const double headspace0 = bottle.capacity_ml - bottle.fill_ml;
  if (!(headspace0 > 0)) throw std::domain_error("bottle overcompressed");

  const double p0 = cfg.atm_pressure_kpa;
  const double mu_term = std::pow(liquid.viscosity_cp, cfg.viscosity_exponent);
  const double rho_term = std::pow(liquid.density_g_per_ml, cfg.nozzle_density_exponent);
  const double coeff = cfg.nozzle_coeff / (mu_term * rho_term);
  // kPa per cm of liquid column: rho_SI * g / 100
  const double head_kpa_per_cm = liquid.density_g_per_ml * cfg.gravity_m_s2 * 0.01;

  auto flow = [&](double t, double dispensed) {
    const double v_air = headspace0 + dispensed - profile.compression_ml(t);
    if (!(v_air > 1e-9)) throw std::domain_error("bottle overcompressed");
    const double p_air = p0 * headspace0 / v_air;
    const double head_cm =
        cfg.hydro_head_base_cm + (bottle.fill_ml - dispensed) / cfg.hydro_area_cm2;
    const double driving = (p_air - p0) + head_kpa_per_cm * head_cm - cfg.nozzle_yield_kpa;
    return std::max(0.0, coeff * driving);
  };

  const double dt = cfg.sim_dt_s;
  const int steps = static_cast<int>(std::lround(profile.duration_s / dt));

  DenseDispense out;
  out.time_s.resize(steps + 1);
  out.dispensed_ml.resize(steps + 1);
  double d = 0.0;
  out.time_s[0] = 0.0;
  out.dispensed_ml[0] = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double t = i * dt;
    const double k1 = flow(t, d);
    const double k2 = flow(t + 0.5 * dt, d + 0.5 * dt * k1);
    const double k3 = flow(t + 0.5 * dt, d + 0.5 * dt * k2);
    const double k4 = flow(t + dt, d + dt * k3);
    d += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.time_s[i + 1] = (i + 1) * dt;
    out.dispensed_ml[i + 1] = d;
  }
  return out;
}

}  // namespace detail

DispenseLog simulate_dispense(const LiquidSpec& liquid, const BottleState& bottle,
                              const SqueezeProfile& profile, std::int64_t seed,
                              const Config& cfg) {
  validate(liquid);
  validate(bottle);
  check_seed(seed);
  if (!(bottle.fill_ml >= cfg.min_fill_ml)) throw std::domain_error("air ingestion regime");

  auto dense = detail::integrate_dispense(liquid, bottle, profile, cfg);

  DispenseLog log;
  log.dense_time_s = std::move(dense.time_s);
  log.dense_dispensed_ml = std::move(dense.dispensed_ml);

  Rng scale_rng(seed_mix({static_cast<std::uint64_t>(seed), kScaleStream}));
  const int stride =
      static_cast<int>(std::lround(1.0 / (cfg.scale_rate_hz * cfg.sim_dt_s)));
  for (std::size_t i = 0; i < log.dense_time_s.size(); i += stride) {
    log.scale_time_s.push_back(log.dense_time_s[i]);
    log.scale_weight_g.push_back(log.dense_dispensed_ml[i] * liquid.density_g_per_ml +
                                 scale_rng.normal(0.0, cfg.scale_noise_sigma_g));
  }
  return log;
}

curves::Curve true_flow_rate_curve(const LiquidSpec& liquid, const BottleState& bottle,
                                   const SqueezeProfile& profile, const Config& cfg) {
  validate(liquid);
  validate(bottle);
  if (!(bottle.fill_ml >= cfg.min_fill_ml)) throw std::domain_error("air ingestion regime");

  auto dense = detail::integrate_dispense(liquid, bottle, profile, cfg);

  // Noiseless 5 Hz weight series through the label pipeline: truth knots and
  // training labels share the same resampling semantics.
  const int stride = static_cast<int>(std::lround(1.0 / (cfg.scale_rate_hz * cfg.sim_dt_s)));
  std::vector<double> t5, w5;
  for (std::size_t i = 0; i < dense.time_s.size(); i += stride) {
    t5.push_back(dense.time_s[i]);
    w5.push_back(dense.dispensed_ml[i] * liquid.density_g_per_ml);
  }
  return curves::flow_from_weights(t5, w5, liquid.density_g_per_ml, cfg);
}

double stacking_beta(double viscosity_cp, const Config& cfg) {
  return cfg.stacking_beta_base + cfg.stacking_beta_log_coeff * std::log10(viscosity_cp);
}

curves::Curve true_stacking_curve(const LiquidSpec& liquid, const Config& cfg) {
  validate(liquid);
  if (!(liquid.viscosity_cp >= cfg.stacking_min_viscosity_cp))
    throw std::domain_error("no stable stacking");
  const double beta = stacking_beta(liquid.viscosity_cp, cfg);
  std::vector<double> kx(cfg.stacking_knot_count), ky(cfg.stacking_knot_count);
  for (int i = 0; i < cfg.stacking_knot_count; ++i) {
    const double w_mm = cfg.stacking_knot_min_mm +
                        (cfg.stacking_knot_max_mm - cfg.stacking_knot_min_mm) * i /
                            (cfg.stacking_knot_count - 1);
    kx[i] = w_mm;
    ky[i] = beta * (w_mm / 10.0) * (w_mm / 10.0);
  }
  return curves::Curve::fit_spline(std::move(kx), std::move(ky), curves::CurveKind::stacking);
}

std::vector<double> simulate_weight_sensor(const DispenseLog& log, const LiquidSpec& liquid,
                                           const BottleState& bottle,
                                           const std::vector<bool>& arm_moving,
                                           std::int64_t seed, const Config& cfg) {
  validate(liquid);
  validate(bottle);
  check_seed(seed);
  if (log.dense_time_s.size() < 2 || log.dense_time_s.size() != log.dense_dispensed_ml.size())
    throw std::invalid_argument("simulate_weight_sensor: invalid dispense log");

  const double t_end = log.dense_time_s.back();
  const double dt = 1.0 / cfg.ft_rate_hz;
  const int n = static_cast<int>(std::lround(t_end * cfg.ft_rate_hz)) + 1;
  if (arm_moving.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("simulate_weight_sensor: arm_moving length mismatch");

  auto dispensed_at = [&](double t) {
    if (t <= log.dense_time_s.front()) return log.dense_dispensed_ml.front();
    if (t >= t_end) return log.dense_dispensed_ml.back();
    const double pos = t / (log.dense_time_s[1] - log.dense_time_s[0]);
    const std::size_t k = std::min(static_cast<std::size_t>(pos), log.dense_time_s.size() - 2);
    const double u = (t - log.dense_time_s[k]) / (log.dense_time_s[k + 1] - log.dense_time_s[k]);
    return log.dense_dispensed_ml[k] * (1.0 - u) + log.dense_dispensed_ml[k + 1] * u;
  };

  Rng rng(seed_mix({static_cast<std::uint64_t>(seed), kSensorStream}));
  std::vector<double> force_g(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const double remaining_g = (bottle.fill_ml - dispensed_at(t)) * liquid.density_g_per_ml;
    double f = bottle.bottle_mass_g + remaining_g + rng.normal(0.0, cfg.ft_noise_sigma_g);
    if (arm_moving[i])
      f += cfg.vibration_amp_g * std::sin(2.0 * std::numbers::pi * cfg.vibration_freq_hz * t);
    force_g[i] = f;
  }
  return force_g;
}

double calibrate_nozzle_coeff(const Config& cfg) {
  LiquidSpec ref{1000.0, 1.0, "calibration"};
  BottleState bottle{cfg.capacity_ml, 300.0, cfg.bottle_tare_g};
  const SqueezeProfile profile = SqueezeProfile::two_stage(cfg);

  auto peak_flow = [&](double coeff) {
    Config c = cfg;
    c.nozzle_coeff = coeff;
    auto dense = detail::integrate_dispense(ref, bottle, profile, c);
    double peak = 0.0;
    for (std::size_t i = 1; i < dense.time_s.size(); ++i) {
      const double q =
          (dense.dispensed_ml[i] - dense.dispensed_ml[i - 1]) / (dense.time_s[i] - dense.time_s[i - 1]);
      peak = std::max(peak, q);
    }
    return peak;
  };

  double lo = 1e-6, hi = 1e3;
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (peak_flow(mid) < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace squeeze::sim
