#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "squeeze/dataset.hpp"
#include "squeeze/liquid_sim.hpp"
#include "squeeze/rng.hpp"

using namespace squeeze;

namespace {

const Config kCfg;

sim::LiquidSpec liquid(double mu, double rho = 1.0) { return {mu, rho, "test"}; }
sim::BottleState bottle(double fill) { return {kCfg.capacity_ml, fill, kCfg.bottle_tare_g}; }

// log-envelope regression on the rectified slosh signal
double fitted_decay_tau(const std::vector<double>& osc, double settled, double rate_hz) {
  std::vector<std::pair<double, double>> peaks;  // (t, log |peak|)
  for (std::size_t i = 1; i + 1 < osc.size(); ++i) {
    const double a = std::abs(osc[i] - settled);
    if (a > std::abs(osc[i - 1] - settled) && a > std::abs(osc[i + 1] - settled) && a > 1e-7)
      peaks.push_back({i / rate_hz, std::log(a)});
  }
  REQUIRE(peaks.size() >= 4);
  // least squares on the first handful of peaks, before the envelope dies
  const std::size_t n = std::min<std::size_t>(peaks.size(), 8);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += peaks[i].first;
    sy += peaks[i].second;
    sxx += peaks[i].first * peaks[i].first;
    sxy += peaks[i].first * peaks[i].second;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -1.0 / slope;
}

}  // namespace

TEST_CASE("exploration rejects bad inputs") {
  CHECK_THROWS_WITH_AS(sim::simulate_exploration(liquid(100), bottle(0.0), 1, kCfg),
                       "nothing to slosh", std::domain_error);
  CHECK_THROWS_AS(sim::simulate_exploration(liquid(100), bottle(300), -1, kCfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(sim::simulate_exploration(liquid(0.5), bottle(300), 1, kCfg),
                  std::domain_error);
  CHECK_THROWS_AS(sim::simulate_exploration(liquid(100, 2.0), bottle(300), 1, kCfg),
                  std::domain_error);
}

TEST_CASE("exploration traces are deterministic and well-shaped") {
  const auto a = sim::simulate_exploration(liquid(500, 1.1), bottle(300), 42, kCfg);
  const auto b = sim::simulate_exploration(liquid(500, 1.1), bottle(300), 42, kCfg);
  CHECK(a.rotation_torque.size() == 1000);
  CHECK(a.oscillation_torque.size() == 10000);
  CHECK(a.rotation_torque == b.rotation_torque);
  CHECK(a.oscillation_torque == b.oscillation_torque);
  const auto c = sim::simulate_exploration(liquid(500, 1.1), bottle(300), 43, kCfg);
  CHECK(a.rotation_torque != c.rotation_torque);
}

TEST_CASE("near-empty bottle has vanishing slosh amplitude") {
  Config quiet = kCfg;
  quiet.torque_noise_sigma_nm = 0.0;
  const auto tr = sim::simulate_exploration(liquid(100), bottle(0.0001), 1, quiet);
  const double settled =
      (kCfg.bottle_tare_g + 0.0001 * 1.0) * 1e-3 * quiet.gravity_m_s2 * quiet.torque_arm_m;
  for (double v : tr.oscillation_torque) CHECK(std::abs(v - settled) < 1e-6);
}

TEST_CASE("slosh decay constants recovered by envelope regression") {
  Config quiet = kCfg;
  quiet.torque_noise_sigma_nm = 0.0;
  const double settled = (kCfg.bottle_tare_g + 300.0) * 1e-3 * quiet.gravity_m_s2 * 0.1;

  const auto thin = sim::simulate_exploration(liquid(10), bottle(300), 5, quiet);
  const double tau_thin = fitted_decay_tau(thin.oscillation_torque, settled, 1000.0);
  CHECK(tau_thin == doctest::Approx(2.5 / 1.5).epsilon(0.05));

  const auto thick = sim::simulate_exploration(liquid(10000), bottle(300), 5, quiet);
  const double tau_thick = fitted_decay_tau(thick.oscillation_torque, settled, 1000.0);
  CHECK(tau_thick == doctest::Approx(2.5 / 4.5).epsilon(0.05));

  CHECK(tau_thick < tau_thin);  // decay time falls with viscosity
}

TEST_CASE("dispense rejects bad inputs") {
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  CHECK_THROWS_WITH_AS(sim::simulate_dispense(liquid(100), bottle(40), prof, 1, kCfg),
                       "air ingestion regime", std::domain_error);
  CHECK_THROWS_AS(sim::simulate_dispense(liquid(100), bottle(300), prof, -3, kCfg),
                  std::invalid_argument);
  SUBCASE("overcompression") {
    // zero headspace: any compression exceeds headspace + dispensed
    sim::BottleState tight{500.0, 500.0, kCfg.bottle_tare_g};
    CHECK_THROWS_WITH_AS(sim::simulate_dispense(liquid(70000), tight, prof, 1, kCfg),
                         "bottle overcompressed", std::domain_error);
  }
}

TEST_CASE("no compression, no flow") {
  auto prof = sim::SqueezeProfile::two_stage(kCfg);
  prof.dv_max_ml = 0.0;
  const auto log = sim::simulate_dispense(liquid(100), bottle(300), prof, 1, kCfg);
  for (double v : log.dense_dispensed_ml) CHECK(v == 0.0);
}

TEST_CASE("dispensed volume equals the flow integral") {
  // trapezoid over flows re-derived from the model state, vs the integrator
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  for (double mu : {1.0, 30.0, 1000.0, 70000.0}) {
    for (double fill : {130.0, 300.0, 500.0}) {
      const auto L = liquid(mu, 1.1);
      const auto B = bottle(fill);
      const auto d = sim::detail::integrate_dispense(L, B, prof, kCfg);
      const double h0 = B.capacity_ml - B.fill_ml;
      auto flow_at = [&](std::size_t i) {
        const double v_air = h0 + d.dispensed_ml[i] - prof.compression_ml(d.time_s[i]);
        const double p_air = kCfg.atm_pressure_kpa * h0 / v_air;
        const double head = kCfg.hydro_head_base_cm +
                            (B.fill_ml - d.dispensed_ml[i]) / kCfg.hydro_area_cm2;
        const double driving = (p_air - kCfg.atm_pressure_kpa) +
                               L.density_g_per_ml * kCfg.gravity_m_s2 * 0.01 * head -
                               kCfg.nozzle_yield_kpa;
        return std::max(0.0, kCfg.nozzle_coeff * driving /
                                 (std::pow(mu, kCfg.viscosity_exponent) *
                                  std::pow(L.density_g_per_ml, kCfg.nozzle_density_exponent)));
      };
      double integral = 0.0;
      for (std::size_t i = 0; i + 1 < d.time_s.size(); ++i)
        integral += 0.5 * (flow_at(i) + flow_at(i + 1)) * kCfg.sim_dt_s;
      CHECK(d.dispensed_ml.back() ==
            doctest::Approx(integral).epsilon(0.001));  // 0.1 percent
    }
  }
}

TEST_CASE("viscosity ordering and early-time flow ratio") {
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  const auto thin = sim::detail::integrate_dispense(liquid(100), bottle(300), prof, kCfg);
  const auto thick = sim::detail::integrate_dispense(liquid(1000), bottle(300), prof, kCfg);
  CHECK(thick.dispensed_ml.back() < thin.dispensed_ml.back());

  // at t = 1 s both pressure trajectories are still near-identical
  const std::size_t i1 = 100;
  const double q_thin =
      (thin.dispensed_ml[i1 + 1] - thin.dispensed_ml[i1 - 1]) / (2 * kCfg.sim_dt_s);
  const double q_thick =
      (thick.dispensed_ml[i1 + 1] - thick.dispensed_ml[i1 - 1]) / (2 * kCfg.sim_dt_s);
  CHECK(q_thick / q_thin == doctest::Approx(std::pow(10.0, -0.6)).epsilon(0.05));
}

TEST_CASE("total dispensed volume is non-increasing in viscosity") {
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  double prev = 1e18;
  for (double mu : {1.0, 10.0, 100.0, 1000.0, 10000.0, 70000.0}) {
    const auto d = sim::detail::integrate_dispense(liquid(mu), bottle(300), prof, kCfg);
    CHECK(d.dispensed_ml.back() <= prev + 1e-12);
    prev = d.dispensed_ml.back();
  }
}

TEST_CASE("scale series subsamples the dense series") {
  Config quiet = kCfg;
  quiet.scale_noise_sigma_g = 0.0;
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  const auto L = liquid(300, 1.2);
  const auto log = sim::simulate_dispense(L, bottle(300), prof, 9, quiet);
  REQUIRE(log.scale_time_s.size() == 86);
  for (std::size_t k = 0; k < log.scale_time_s.size(); ++k) {
    const std::size_t dense_i = k * 20;
    CHECK(log.scale_weight_g[k] ==
          doctest::Approx(log.dense_dispensed_ml[dense_i] * 1.2).epsilon(1e-12));
  }
  // cumulative and non-decreasing
  for (std::size_t k = 1; k < log.scale_weight_g.size(); ++k)
    CHECK(log.scale_weight_g[k] >= log.scale_weight_g[k - 1] - 1e-12);
}

TEST_CASE("true flow curve: knots nonnegative, interpolation exact, regime split") {
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  const double gradual_rate =
      kCfg.squeeze_dv_ml * (1.0 - kCfg.squeeze_rapid_fraction) /
      (kCfg.squeeze_total_s - kCfg.squeeze_rapid_s);
  for (double mu : {1.0, 50.0, 638.0, 5000.0, 70000.0}) {
    for (double fill : {130.0, 300.0, 480.0}) {
      const auto c = sim::true_flow_rate_curve(liquid(mu), bottle(fill), prof, kCfg);
      REQUIRE(c.size() == 18);
      for (double y : c.knot_y()) CHECK(y >= 0.0);
      for (std::size_t k = 0; k < c.size(); ++k) CHECK(c.eval(c.knot_x()[k]) == c.knot_y()[k]);

      // rapid squeeze produces the pressure peak whenever the liquid can
      // outflow the gradual squeeze; otherwise pressure (and flow) keeps
      // rising to the end
      std::size_t am = 0;
      for (std::size_t k = 0; k < c.size(); ++k)
        if (c.knot_y()[k] > c.knot_y()[am]) am = k;
      const double peak = c.knot_y()[am];
      if (peak > 1.25 * gradual_rate) {
        CHECK(c.knot_x()[am] <= 3.0);
      } else {
        for (std::size_t k = 4; k + 1 < c.size(); ++k)
          CHECK(c.knot_y()[k + 1] >= c.knot_y()[k] - 1e-9);
      }
    }
  }
}

TEST_CASE("true stacking curve") {
  SUBCASE("formula spot check") {
    const auto c = sim::true_stacking_curve(liquid(10000), kCfg);
    REQUIRE(c.size() == 10);
    CHECK(sim::stacking_beta(10000, kCfg) == doctest::Approx(0.118).epsilon(1e-12));
    CHECK(c.eval(20.0) == doctest::Approx(0.472).epsilon(1e-12));  // rho(2 cm)
    CHECK(c.eval(20.0) <= 0.5);  // inside the labeled data range
  }
  SUBCASE("strictly increasing in thickness") {
    for (double mu : {50.0, 500.0, 70000.0}) {
      const auto c = sim::true_stacking_curve(liquid(mu), kCfg);
      CHECK(c.strictly_monotone());
      for (int i = 1; i <= 100; ++i)
        CHECK(c.eval(5.0 + 0.15 * i) > c.eval(5.0 + 0.15 * (i - 1)));
    }
  }
  SUBCASE("increasing in viscosity at fixed thickness") {
    double prev = 0.0;
    for (double mu : {50.0, 200.0, 1000.0, 20000.0, 70000.0}) {
      const double v = sim::true_stacking_curve(liquid(mu), kCfg).eval(10.0);
      CHECK(v > prev);
      prev = v;
    }
  }
  SUBCASE("watery liquids hold no shape") {
    CHECK_THROWS_WITH_AS(sim::true_stacking_curve(liquid(49.9), kCfg), "no stable stacking",
                         std::domain_error);
  }
}

TEST_CASE("weight sensor") {
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  const auto L = liquid(1000, 1.0);
  const auto B = bottle(300);
  const auto log = sim::simulate_dispense(L, B, prof, 4, kCfg);
  const int n = static_cast<int>(std::lround(17.0 * kCfg.ft_rate_hz)) + 1;

  SUBCASE("noiseless readings reproduce the dispensed mass exactly") {
    Config quiet = kCfg;
    quiet.ft_noise_sigma_g = 0.0;
    quiet.vibration_amp_g = 0.0;
    std::vector<bool> moving(n, true);
    const auto f = sim::simulate_weight_sensor(log, L, B, moving, 8, quiet);
    REQUIRE(static_cast<int>(f.size()) == n);
    for (int i = 0; i < n; i += 17) {
      const double dispensed = (B.bottle_mass_g + B.fill_ml * 1.0) - f[i];
      const std::size_t dense_i = static_cast<std::size_t>(i);  // both 100 Hz
      CHECK(dispensed == doctest::Approx(log.dense_dispensed_ml[dense_i]).epsilon(1e-9));
    }
  }

  SUBCASE("raw differencing of two noisy readings spreads as sigma*sqrt(2)") {
    // 5 g dispensed; estimate = first reading - last reading
    sim::DispenseLog ramp;
    for (int i = 0; i <= 1000; ++i) {
      ramp.dense_time_s.push_back(i * 0.01);
      ramp.dense_dispensed_ml.push_back(5.0 * i / 1000.0);
    }
    std::vector<bool> still(1001, false);
    std::vector<double> est;
    for (int seed = 0; seed < 1000; ++seed) {
      const auto f = sim::simulate_weight_sensor(ramp, L, B, still, seed, kCfg);
      est.push_back(f.front() - f.back());
    }
    double mean = 0;
    for (double e : est) mean += e;
    mean /= est.size();
    double var = 0;
    for (double e : est) var += (e - mean) * (e - mean);
    const double sd = std::sqrt(var / (est.size() - 1));
    CHECK(sd >= 13.0);  // sigma*sqrt(2) ~ 14.1, minus sampling slack
    CHECK(sd <= 15.5);
  }

  SUBCASE("25 Hz vibration appears only while the arm moves") {
    auto spectrum_at_25hz = [&](const std::vector<double>& f, const std::vector<bool>&) {
      // residual after removing the known true weight
      std::vector<double> resid(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) {
        const double truth = B.bottle_mass_g + (B.fill_ml - log.dense_dispensed_ml[i]) * 1.0;
        resid[i] = f[i] - truth;
      }
      auto mag_at = [&](double hz) {
        double re = 0, im = 0;
        for (std::size_t i = 0; i < resid.size(); ++i) {
          const double w = 2.0 * std::numbers::pi * hz * (i / kCfg.ft_rate_hz);
          re += resid[i] * std::cos(w);
          im -= resid[i] * std::sin(w);
        }
        return std::hypot(re, im);
      };
      const double peak = mag_at(25.0);
      double band = 0.0;
      int m = 0;
      for (double hz = 10.0; hz <= 40.0; hz += 1.0) {
        if (std::abs(hz - 25.0) < 2.0) continue;
        band += mag_at(hz);
        ++m;
      }
      return peak / (band / m);
    };
    std::vector<bool> still(n, false), moving(n, true);
    const double ratio_still =
        spectrum_at_25hz(sim::simulate_weight_sensor(log, L, B, still, 3, kCfg), still);
    const double ratio_moving =
        spectrum_at_25hz(sim::simulate_weight_sensor(log, L, B, moving, 3, kCfg), moving);
    CHECK(ratio_still < 5.0);
    CHECK(ratio_moving > 20.0);
  }
}

TEST_CASE("nozzle coefficient calibration matches the frozen default") {
  const double c = sim::calibrate_nozzle_coeff(kCfg);
  CHECK(c == doctest::Approx(kCfg.nozzle_coeff).epsilon(1e-9));
  // and the reference run actually peaks at 1 ml/s
  const auto d = sim::detail::integrate_dispense(liquid(1000, 1.0), bottle(300),
                                                 sim::SqueezeProfile::two_stage(kCfg), kCfg);
  double peak = 0.0;
  for (std::size_t i = 1; i < d.time_s.size(); ++i)
    peak = std::max(peak, (d.dispensed_ml[i] - d.dispensed_ml[i - 1]) / kCfg.sim_dt_s);
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("grid traces are pairwise separated by 10x the noise floor") {
  Config quiet = kCfg;
  quiet.torque_noise_sigma_nm = 0.0;
  const auto grid = dataset::ExperimentGrid::from_config(kCfg);
  std::vector<std::vector<double>> traces;
  for (const auto& L : grid.training)
    for (double fill : grid.fills_ml) {
      const auto tr = sim::simulate_exploration(L, bottle(fill), 0, quiet);
      std::vector<double> v = tr.rotation_torque;
      v.insert(v.end(), tr.oscillation_torque.begin(), tr.oscillation_torque.end());
      traces.push_back(std::move(v));
    }
  const double threshold = 10.0 * kCfg.torque_noise_sigma_nm;
  const double thr2 = threshold * threshold;
  double min_d2 = 1e18;
  for (std::size_t i = 0; i < traces.size(); ++i)
    for (std::size_t j = i + 1; j < traces.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < traces[i].size(); ++k) {
        const double d = traces[i][k] - traces[j][k];
        s += d * d;
        if (s > thr2 && s > min_d2) break;
      }
      min_d2 = std::min(min_d2, s);
    }
  CHECK(std::sqrt(min_d2) >= threshold);
}

TEST_CASE("squeeze profiles are non-decreasing and hit their endpoints") {
  for (auto prof : {sim::SqueezeProfile::two_stage(kCfg), sim::SqueezeProfile::constant_rate(kCfg)}) {
    CHECK(prof.compression_ml(0.0) == 0.0);
    CHECK(prof.compression_ml(prof.duration_s) == prof.dv_max_ml);
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double c = prof.compression_ml(prof.duration_s * i / 200.0);
      CHECK(c >= prev - 1e-12);
      prev = c;
    }
    CHECK(prof.compression_ml(-1.0) == 0.0);
    CHECK(prof.compression_ml(prof.duration_s + 5.0) == prof.dv_max_ml);
  }
}

TEST_CASE("air pressure never drops below ambient and flow is never negative") {
  const auto prof = sim::SqueezeProfile::two_stage(kCfg);
  for (double mu : {1.0, 200.0, 70000.0}) {
    const auto B = bottle(300);
    const auto d = sim::detail::integrate_dispense(liquid(mu), B, prof, kCfg);
    for (std::size_t i = 0; i < d.time_s.size(); ++i) {
      // P >= P0 iff dispensed <= compression
      CHECK(d.dispensed_ml[i] <= prof.compression_ml(d.time_s[i]) + 1e-9);
      if (i > 0) CHECK(d.dispensed_ml[i] >= d.dispensed_ml[i - 1] - 1e-12);
    }
  }
}
