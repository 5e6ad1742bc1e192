#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace squeeze {

// Every tunable constant of the toolkit lives here so an experiment is fully
// reproducible from one flat key/value file (see Config::load / save).
// Defaults are the calibrated values used by the shipped benchmarks.
struct Config {
  // --- bottle & liquid simulation -------------------------------------
  double capacity_ml = 555.0;        // air-tight bottle volume (500 ml = 90% full)
  double bottle_tare_g = 150.0;      // empty bottle + holder
  double gravity_m_s2 = 9.81;
  double torque_arm_m = 0.1;         // wrist-to-CG lever arm
  double torque_noise_sigma_nm = 0.001;
  double slosh_amp_coeff = 0.1;      // A = coeff * m_liquid_kg * g * arm
  double slosh_freq_base_hz = 0.6;
  double slosh_freq_span_hz = 1.6;   // f_s = base + span * (1 - fill_fraction)
  double slosh_tau_numerator = 2.5;  // tau_d = num / (offset + log10 mu)
  double slosh_tau_offset = 0.5;
  double rotation_duration_s = 1.0;
  double pause_duration_s = 10.0;
  double haptic_rate_hz = 1000.0;

  double atm_pressure_kpa = 101.325;
  double viscosity_exponent = 0.6;   // q = C * dP / mu^exponent
  double nozzle_coeff = 6.2810613769369;  // calibrated: mu=1000cP, 300ml, two-stage peaks at 1 ml/s
  // hydrostatic head of the liquid column above the nozzle, plus the yield
  // threshold that keeps a resting bottle from dripping
  double hydro_head_base_cm = 12.0;  // nozzle drop below the bottle shoulder
  double hydro_area_cm2 = 38.0;      // bottle cross-section
  double nozzle_yield_kpa = 4.0;
  double nozzle_density_exponent = 0.7;  // nozzle discharge falls with density
  double squeeze_total_s = 17.0;
  double squeeze_rapid_s = 2.0;
  double squeeze_dv_ml = 40.0;
  double squeeze_rapid_fraction = 0.7;
  double sim_dt_s = 0.01;
  double min_fill_ml = 50.0;         // below this the nozzle draws air

  double scale_rate_hz = 5.0;
  double scale_noise_sigma_g = 0.002;

  double ft_rate_hz = 100.0;
  double ft_noise_sigma_g = 10.0;
  double vibration_amp_g = 15.0;
  double vibration_freq_hz = 25.0;

  double stacking_beta_base = 0.03;  // beta(mu) = base + log_coeff * log10(mu)
  double stacking_beta_log_coeff = 0.022;
  double stacking_min_viscosity_cp = 50.0;

  // --- feature extraction ----------------------------------------------
  int rotation_feature_samples = 10;    // 0.1 s spacing over the 1 s rotation
  double spectrum_min_hz = 0.1;
  double spectrum_max_hz = 2.2;         // 22 bins at 0.1 Hz; total feature = 33

  // --- curves ----------------------------------------------------------
  int flow_knot_count = 17;             // plus the fixed (0,0) anchor
  double stacking_knot_min_mm = 5.0;
  double stacking_knot_max_mm = 20.0;
  int stacking_knot_count = 10;
  int weight_smoothing_samples = 5;     // centered moving average, 1 s at 5 Hz

  // --- neural network --------------------------------------------------
  std::vector<int> nn_hidden_dims{128, 32};
  int nn_epochs = 500;
  int nn_batch_size = 32;
  double nn_lr0 = 0.005;
  double nn_lr_decay = 0.9;
  int nn_lr_decay_every = 15;
  double nn_adam_beta1 = 0.9;
  double nn_adam_beta2 = 0.999;
  double nn_adam_eps = 1e-8;
  double nn_val_fraction = 0.15;        // held out by liquid, reported only

  // --- open-loop control -----------------------------------------------
  double speed_min_cm_s = 0.2;
  double speed_max_cm_s = 15.0;
  double profile_dt_s = 0.05;
  double draw_start_s = 3.0;            // drawing begins past the rapid-squeeze transient
  double stroke_path_length_cm = 10.0;
  double stroke_ds_cm = 0.05;
  double stroke_edge_trim_cm = 0.25;    // deposition edge cells excluded from metrics

  // --- weight-feedback baseline ----------------------------------------
  double kalman_process_noise_g2 = 0.25;   // per 100 Hz step
  double kalman_measurement_noise_g2 = 100.0;
  double wf_diff_window_s = 0.4;
  double wf_warmup_s = 1.0;

  // --- experiment grid ---------------------------------------------------
  int grid_train_liquids = 20;
  double grid_mu_min_cp = 1.0;
  double grid_mu_max_cp = 70000.0;
  std::vector<double> grid_densities{0.9, 1.0, 1.1, 1.25, 1.4};
  int grid_fill_count = 21;
  double grid_fill_min_ml = 130.0;
  double grid_fill_max_ml = 500.0;
  // test liquids sit at geometric midpoints of these training pairs (i, i+1)
  std::vector<int> grid_test_pair_indices{13, 14, 15, 16, 17};

  // --- benchmark ---------------------------------------------------------
  std::vector<double> bench_fills_ml{200.0, 300.0, 400.0};
  std::vector<double> bench_targets_mm{5.0, 10.0, 15.0, 20.0};

  // Throws std::runtime_error / std::domain_error on bad files or values.
  static Config load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;
  std::string to_flat_json() const;
  void apply_flat_json(const std::string& text);  // unknown keys rejected
  void validate() const;

  int spectrum_bin_count() const;
  int feature_length() const;
  double flow_knot_spacing_s() const { return squeeze_total_s / flow_knot_count; }
};

}  // namespace squeeze
