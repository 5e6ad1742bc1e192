#pragma once

#include <iosfwd>
#include <vector>

#include "squeeze/config.hpp"

namespace squeeze::curves {

enum class CurveKind { flow_rate, stacking };

// Knot-interpolating monotonicity-preserving cubic (Fritsch-Carlson family,
// Butland slope formula). Each interval's interpolant stays between its knot
// values, so nonnegative knots can never produce a negative excursion.
class Curve {
 public:
  Curve() = default;

  static Curve fit_spline(std::vector<double> knot_x, std::vector<double> knot_y,
                          CurveKind kind);

  // Constant extrapolation outside the knot range.
  double eval(double x) const;

  struct EvalResult {
    double y;
    bool clamped;  // x was outside the knot range
  };
  EvalResult eval_flagged(double x) const;

  // Solves eval(x) = y by bisection to |dx| < 1e-9. Requires strictly
  // monotone knot values; queries outside the value range return the domain
  // endpoint with the clamp flag set.
  struct InvertResult {
    double x;
    bool clamped;
  };
  InvertResult invert_monotone(double y) const;

  bool strictly_monotone() const;

  const std::vector<double>& knot_x() const { return x_; }
  const std::vector<double>& knot_y() const { return y_; }
  CurveKind kind() const { return kind_; }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  std::size_t size() const { return x_.size(); }

  // Two-column CSV of a dense sampling, header names the units.
  void write_csv(std::ostream& out, int samples = 200) const;

 private:
  std::vector<double> x_, y_, slope_;
  CurveKind kind_ = CurveKind::flow_rate;
};

// Mean absolute difference at five evenly spaced points spanning the common
// domain, endpoints included.
double curve_error(const Curve& pred, const Curve& truth);

// Reconstructs a flow-rate curve from a 5 Hz cumulative-weight log: central
// finite difference, divide by density, centered moving average (1 s window),
// resample at the knot seconds, prepend the (0,0) anchor.
Curve flow_from_weights(const std::vector<double>& time_s,
                        const std::vector<double>& cumulative_g, double density_g_per_ml,
                        const Config& cfg);

}  // namespace squeeze::curves
