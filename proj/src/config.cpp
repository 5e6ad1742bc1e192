#include "squeeze/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace squeeze {

namespace {

using nlohmann::json;

// One registry for both directions; keys are the flat config-file names.
template <class Cfg, class F>
void visit_fields(Cfg& c, F&& f) {
  f("sim.capacity_ml", c.capacity_ml);
  f("sim.bottle_tare_g", c.bottle_tare_g);
  f("sim.gravity_m_s2", c.gravity_m_s2);
  f("sim.torque_arm_m", c.torque_arm_m);
  f("sim.torque_noise_sigma_nm", c.torque_noise_sigma_nm);
  f("sim.slosh_amp_coeff", c.slosh_amp_coeff);
  f("sim.slosh_freq_base_hz", c.slosh_freq_base_hz);
  f("sim.slosh_freq_span_hz", c.slosh_freq_span_hz);
  f("sim.slosh_tau_numerator", c.slosh_tau_numerator);
  f("sim.slosh_tau_offset", c.slosh_tau_offset);
  f("sim.rotation_duration_s", c.rotation_duration_s);
  f("sim.pause_duration_s", c.pause_duration_s);
  f("sim.haptic_rate_hz", c.haptic_rate_hz);
  f("sim.atm_pressure_kpa", c.atm_pressure_kpa);
  f("sim.viscosity_exponent", c.viscosity_exponent);
  f("sim.nozzle_coeff", c.nozzle_coeff);
  f("sim.hydro_head_base_cm", c.hydro_head_base_cm);
  f("sim.hydro_area_cm2", c.hydro_area_cm2);
  f("sim.nozzle_yield_kpa", c.nozzle_yield_kpa);
  f("sim.nozzle_density_exponent", c.nozzle_density_exponent);
  f("sim.squeeze_total_s", c.squeeze_total_s);
  f("sim.squeeze_rapid_s", c.squeeze_rapid_s);
  f("sim.squeeze_dv_ml", c.squeeze_dv_ml);
  f("sim.squeeze_rapid_fraction", c.squeeze_rapid_fraction);
  f("sim.sim_dt_s", c.sim_dt_s);
  f("sim.min_fill_ml", c.min_fill_ml);
  f("sim.scale_rate_hz", c.scale_rate_hz);
  f("sim.scale_noise_sigma_g", c.scale_noise_sigma_g);
  f("sim.ft_rate_hz", c.ft_rate_hz);
  f("sim.ft_noise_sigma_g", c.ft_noise_sigma_g);
  f("sim.vibration_amp_g", c.vibration_amp_g);
  f("sim.vibration_freq_hz", c.vibration_freq_hz);
  f("sim.stacking_beta_base", c.stacking_beta_base);
  f("sim.stacking_beta_log_coeff", c.stacking_beta_log_coeff);
  f("sim.stacking_min_viscosity_cp", c.stacking_min_viscosity_cp);
  f("feature.rotation_samples", c.rotation_feature_samples);
  f("feature.spectrum_min_hz", c.spectrum_min_hz);
  f("feature.spectrum_max_hz", c.spectrum_max_hz);
  f("curves.flow_knot_count", c.flow_knot_count);
  f("curves.stacking_knot_min_mm", c.stacking_knot_min_mm);
  f("curves.stacking_knot_max_mm", c.stacking_knot_max_mm);
  f("curves.stacking_knot_count", c.stacking_knot_count);
  f("curves.weight_smoothing_samples", c.weight_smoothing_samples);
  f("nn.hidden_dims", c.nn_hidden_dims);
  f("nn.epochs", c.nn_epochs);
  f("nn.batch_size", c.nn_batch_size);
  f("nn.lr0", c.nn_lr0);
  f("nn.lr_decay", c.nn_lr_decay);
  f("nn.lr_decay_every", c.nn_lr_decay_every);
  f("nn.adam_beta1", c.nn_adam_beta1);
  f("nn.adam_beta2", c.nn_adam_beta2);
  f("nn.adam_eps", c.nn_adam_eps);
  f("nn.val_fraction", c.nn_val_fraction);
  f("control.speed_min_cm_s", c.speed_min_cm_s);
  f("control.speed_max_cm_s", c.speed_max_cm_s);
  f("control.profile_dt_s", c.profile_dt_s);
  f("control.draw_start_s", c.draw_start_s);
  f("control.stroke_path_length_cm", c.stroke_path_length_cm);
  f("control.stroke_ds_cm", c.stroke_ds_cm);
  f("control.stroke_edge_trim_cm", c.stroke_edge_trim_cm);
  f("kalman.process_noise_g2", c.kalman_process_noise_g2);
  f("kalman.measurement_noise_g2", c.kalman_measurement_noise_g2);
  f("kalman.wf_diff_window_s", c.wf_diff_window_s);
  f("kalman.wf_warmup_s", c.wf_warmup_s);
  f("grid.train_liquids", c.grid_train_liquids);
  f("grid.mu_min_cp", c.grid_mu_min_cp);
  f("grid.mu_max_cp", c.grid_mu_max_cp);
  f("grid.densities", c.grid_densities);
  f("grid.fill_count", c.grid_fill_count);
  f("grid.fill_min_ml", c.grid_fill_min_ml);
  f("grid.fill_max_ml", c.grid_fill_max_ml);
  f("grid.test_pair_indices", c.grid_test_pair_indices);
  f("bench.fills_ml", c.bench_fills_ml);
  f("bench.targets_mm", c.bench_targets_mm);
}

}  // namespace

int Config::spectrum_bin_count() const {
  // bin resolution is 1/window = 0.1 Hz for the 10 s pause
  const double resolution = 1.0 / pause_duration_s;
  return static_cast<int>(std::lround((spectrum_max_hz - spectrum_min_hz) / resolution)) + 1;
}

int Config::feature_length() const {
  return rotation_feature_samples + spectrum_bin_count() + 1;
}

std::string Config::to_flat_json() const {
  json j = json::object();
  visit_fields(*this, [&](const char* key, const auto& value) { j[key] = value; });
  return j.dump(2) + "\n";
}

void Config::apply_flat_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: expected a flat JSON object");

  json known = json::object();
  visit_fields(*this, [&](const char* key, auto& value) { known[key] = true; (void)value; });
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key()))
      throw std::runtime_error("config: unknown key '" + it.key() + "'");
  }
  visit_fields(*this, [&](const char* key, auto& value) {
    if (j.contains(key)) {
      try {
        value = j.at(key).get<std::decay_t<decltype(value)>>();
      } catch (const json::exception& e) {
        throw std::runtime_error("config: bad value for '" + std::string(key) + "': " + e.what());
      }
    }
  });
  validate();
}

Config Config::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("config: cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Config cfg;
  cfg.apply_flat_json(ss.str());
  return cfg;
}

void Config::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("config: cannot write " + file.string());
  out << to_flat_json();
}

void Config::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::domain_error(std::string("config: ") + what);
  };
  require(capacity_ml > 0, "capacity_ml must be positive");
  require(bottle_tare_g >= 0, "bottle_tare_g must be non-negative");
  require(torque_noise_sigma_nm >= 0, "torque noise must be non-negative");
  require(scale_noise_sigma_g >= 0, "scale noise must be non-negative");
  require(ft_noise_sigma_g >= 0, "F/T noise must be non-negative");
  require(sim_dt_s > 0 && sim_dt_s < squeeze_total_s, "sim_dt_s out of range");
  require(squeeze_rapid_s > 0 && squeeze_rapid_s < squeeze_total_s, "rapid phase out of range");
  require(squeeze_rapid_fraction > 0 && squeeze_rapid_fraction <= 1, "rapid fraction out of range");
  require(squeeze_dv_ml > 0, "squeeze_dv_ml must be positive");
  require(viscosity_exponent > 0 && viscosity_exponent <= 1, "viscosity exponent out of range");
  require(nozzle_coeff > 0, "nozzle_coeff must be positive");
  require(rotation_feature_samples > 0, "rotation samples must be positive");
  require(spectrum_max_hz > spectrum_min_hz, "spectrum band empty");
  require(flow_knot_count >= 2, "need at least 2 flow knots");
  require(stacking_knot_count >= 2, "need at least 2 stacking knots");
  require(stacking_knot_max_mm > stacking_knot_min_mm, "stacking knot range empty");
  require(weight_smoothing_samples >= 1 && weight_smoothing_samples % 2 == 1,
          "smoothing window must be odd");
  require(nn_epochs > 0 && nn_batch_size > 0, "nn epochs/batch must be positive");
  require(nn_lr0 > 0, "learning rate must be positive");
  require(nn_lr_decay > 0 && nn_lr_decay < 1, "lr decay must be in (0,1)");
  require(nn_lr_decay_every > 0, "lr decay interval must be positive");
  require(nn_val_fraction >= 0 && nn_val_fraction < 1, "val fraction out of range");
  require(speed_min_cm_s > 0 && speed_max_cm_s > speed_min_cm_s, "speed clamp range invalid");
  require(profile_dt_s > 0, "profile_dt_s must be positive");
  require(draw_start_s >= 0 && draw_start_s < squeeze_total_s, "draw_start_s out of range");
  require(stroke_ds_cm > 0, "stroke_ds_cm must be positive");
  require(kalman_process_noise_g2 >= 0, "kalman q must be non-negative");
  require(kalman_measurement_noise_g2 > 0, "kalman r must be positive");
  require(wf_diff_window_s > 0, "wf differencing window must be positive");
  require(grid_train_liquids >= 2, "need at least 2 training liquids");
  require(grid_mu_min_cp >= 1.0 && grid_mu_max_cp <= 70000.0 && grid_mu_min_cp < grid_mu_max_cp,
          "grid viscosity range out of bounds");
  require(!grid_densities.empty(), "density cycle empty");
  for (double d : grid_densities) require(d >= 0.8 && d <= 1.5, "density out of [0.8, 1.5]");
  require(grid_fill_count >= 2, "need at least 2 fill levels");
  require(grid_fill_min_ml >= min_fill_ml, "fill grid starts below dispensable minimum");
  require(grid_fill_max_ml <= capacity_ml, "fill grid exceeds bottle capacity");
  for (int i : grid_test_pair_indices)
    require(i >= 0 && i + 1 < grid_train_liquids, "test pair index out of range");
  require(!bench_fills_ml.empty() && !bench_targets_mm.empty(), "benchmark grid empty");
  for (double f : bench_fills_ml)
    require(f >= grid_fill_min_ml && f <= grid_fill_max_ml, "benchmark fill outside grid range");
  for (double t : bench_targets_mm)
    require(t >= stacking_knot_min_mm && t <= stacking_knot_max_mm,
            "benchmark target outside stacking domain");
}

}  // namespace squeeze
