#pragma once

#include <iosfwd>
#include <vector>

#include "squeeze/config.hpp"
#include "squeeze/curves.hpp"
#include "squeeze/liquid_sim.hpp"

namespace squeeze::pipeline {
struct SpeedProfile;
}

namespace squeeze::stroke_eval {

// Deposited volume-per-length over the arclength grid (ds cells).
struct RhoProfile {
  double ds_cm = 0.05;
  std::vector<double> rho_ml_cm;
  double traversed_cm = 0.0;   // arclength actually covered
  double deposited_ml = 0.0;   // sum of binned volume
  double flow_integral_ml = 0.0;  // dispensed over the traversed window
};

// Integrates nozzle position s(t) from the speed profile and bins the dense
// dispensed volume into arclength cells; stops at path_length or window end.
RhoProfile deposit(const pipeline::SpeedProfile& profile, const sim::DispenseLog& log,
                   double path_length_cm, const Config& cfg);

struct ThicknessProfile {
  std::vector<double> mm;
  int clamped_cells = 0;  // rho outside the invertible stacking range
};

// Per-cell w(s) by inverting the ground-truth stacking curve.
ThicknessProfile thickness_profile(const RhoProfile& rho, const curves::Curve& stacking_truth);

struct StrokeMetrics {
  double mean_abs_error_mm = 0.0;
  double std_dev_mm = 0.0;
  double pct_error = 0.0;     // 100 * error / target
  double pct_variance = 0.0;  // 100 * std / target
  int cells_used = 0;
};

// Mean absolute deviation from the target and population standard deviation
// along the stroke; deposition edge cells (first/last trim) excluded.
StrokeMetrics stroke_metrics(const ThicknessProfile& thickness, double target_mm,
                             const Config& cfg);

struct StrokeResult {
  RhoProfile rho;
  ThicknessProfile thickness;
  StrokeMetrics metrics;
  double target_mm = 0.0;
};

// Three columns per arclength cell: s_cm, rho_ml_per_cm, thickness_mm.
void write_stroke_csv(std::ostream& out, const StrokeResult& stroke);

}  // namespace squeeze::stroke_eval
