#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "squeeze/config.hpp"
#include "squeeze/curves.hpp"

namespace squeeze::sim {

// Hidden ground-truth parameters of a liquid. Known only to the simulator
// and to the privileged PP baseline.
struct LiquidSpec {
  double viscosity_cp = 1000.0;
  double density_g_per_ml = 1.0;
  std::string name;
};
void validate(const LiquidSpec& liquid);

struct BottleState {
  double capacity_ml = 555.0;
  double fill_ml = 300.0;
  double bottle_mass_g = 150.0;
};
void validate(const BottleState& bottle);

enum class SqueezeMode { two_stage, constant_rate };

// Fixed gripper closing motion expressed as bottle-volume reduction over
// time. Two-stage: 70% of dv_max linearly over the rapid phase, the rest
// linearly to the end. Constant-rate: linear throughout (Simple baseline).
struct SqueezeProfile {
  SqueezeMode mode = SqueezeMode::two_stage;
  double duration_s = 17.0;
  double dv_max_ml = 40.0;
  double rapid_s = 2.0;
  double rapid_fraction = 0.7;

  static SqueezeProfile two_stage(const Config& cfg);
  static SqueezeProfile constant_rate(const Config& cfg);

  double compression_ml(double t) const;  // non-decreasing, 0 at t=0, dv_max at duration
};

struct HapticTrace {
  std::vector<double> rotation_torque;     // N*m, 1000 Hz over the 1 s rotation
  std::vector<double> oscillation_torque;  // N*m, 1000 Hz over the 10 s pause
  double sample_rate_hz = 1000.0;
};

struct DispenseLog {
  std::vector<double> dense_time_s;        // sim_dt_s steps
  std::vector<double> dense_dispensed_ml;  // cumulative, non-decreasing
  std::vector<double> scale_time_s;        // 5 Hz
  std::vector<double> scale_weight_g;      // cumulative dispensed weight + scale noise
};

// 90 degree rotation in 1 s + 10 s pause, recorded as wrist torque.
// Rotation: gravity torque of the total mass through theta(t) = (pi/2) t.
// Pause: settled gravity torque + damped slosh sinusoid + sensor noise.
// Deterministic given (inputs, seed).
HapticTrace simulate_exploration(const LiquidSpec& liquid, const BottleState& bottle,
                                 std::int64_t seed, const Config& cfg);

// Fixed-step RK4 on the pneumatic squeeze model:
//   V_air(t) = headspace0 + dispensed(t) - compression(t)
//   P(t)     = P0 * headspace0 / V_air(t)
//   q(t)     = max(0, C * (P - P0) / mu^0.6)
DispenseLog simulate_dispense(const LiquidSpec& liquid, const BottleState& bottle,
                              const SqueezeProfile& profile, std::int64_t seed,
                              const Config& cfg);

// Ground-truth flow-rate curve: the noiseless dense flow pushed through the
// same 5 Hz anti-aliasing resample used to build training labels, so truth
// and labels share knot semantics.
curves::Curve true_flow_rate_curve(const LiquidSpec& liquid, const BottleState& bottle,
                                   const SqueezeProfile& profile, const Config& cfg);

// rho(w) = beta(mu) * w_cm^2 with beta = 0.03 + 0.022 log10(mu); ten knots
// over 5..20 mm. Liquids below 50 cP hold no shape.
curves::Curve true_stacking_curve(const LiquidSpec& liquid, const Config& cfg);

double stacking_beta(double viscosity_cp, const Config& cfg);

// Wrist F/T gravity reading in grams at 100 Hz over the dispense window:
// bottle + remaining liquid, plus white sensor noise, plus a 25 Hz vibration
// term wherever the arm is moving.
std::vector<double> simulate_weight_sensor(const DispenseLog& log, const LiquidSpec& liquid,
                                           const BottleState& bottle,
                                           const std::vector<bool>& arm_moving,
                                           std::int64_t seed, const Config& cfg);

// Bisects the nozzle coefficient so the (mu=1000 cP, 300 ml, two-stage)
// reference run peaks at 1.0 ml/s. The result is frozen into the default
// config; a test checks they agree.
double calibrate_nozzle_coeff(const Config& cfg);

namespace detail {
struct DenseDispense {
  std::vector<double> time_s;
  std::vector<double> dispensed_ml;  // cumulative
};
DenseDispense integrate_dispense(const LiquidSpec& liquid, const BottleState& bottle,
                                 const SqueezeProfile& profile, const Config& cfg);
}  // namespace detail

}  // namespace squeeze::sim
