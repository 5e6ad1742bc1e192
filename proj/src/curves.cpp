#include "squeeze/curves.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace squeeze::curves {

namespace {

inline double h00(double t) { return (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t); }
inline double h10(double t) { return t * (1.0 - t) * (1.0 - t); }

// Interval index such that x[k] <= xv < x[k+1]; assumes xv inside the range.
std::size_t find_interval(const std::vector<double>& x, double xv) {
  auto it = std::upper_bound(x.begin(), x.end(), xv);
  std::size_t k = static_cast<std::size_t>(it - x.begin());
  if (k == 0) return 0;
  if (k >= x.size()) return x.size() - 2;
  return k - 1;
}

}  // namespace

Curve Curve::fit_spline(std::vector<double> knot_x, std::vector<double> knot_y,
                        CurveKind kind) {
  if (knot_x.size() != knot_y.size())
    throw std::invalid_argument("fit_spline: knot_x and knot_y length mismatch");
  if (knot_x.size() < 2) throw std::invalid_argument("fit_spline: need at least 2 knots");
  for (double v : knot_x)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_spline: non-finite knot_x");
  for (double v : knot_y)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_spline: non-finite knot_y");
  for (std::size_t i = 1; i < knot_x.size(); ++i)
    if (!(knot_x[i] > knot_x[i - 1]))
      throw std::invalid_argument("fit_spline: knot_x must be strictly increasing");

  const std::size_t n = knot_x.size();
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = knot_x[k + 1] - knot_x[k];
    d[k] = (knot_y[k + 1] - knot_y[k]) / h[k];
  }

  // Butland slopes: weighted harmonic mean where the secants agree in sign,
  // zero at local extrema and flats. Keeps alpha, beta in [0, 3], which is
  // inside the Fritsch-Carlson monotonicity region for every interval.
  std::vector<double> m(n);
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double prod = d[k - 1] * d[k];
    if (prod > 0.0) {
      const double a = (h[k - 1] + 2.0 * h[k]) / (3.0 * (h[k - 1] + h[k]));
      m[k] = prod / (a * d[k] + (1.0 - a) * d[k - 1]);
    } else {
      m[k] = 0.0;
    }
  }

  Curve c;
  c.x_ = std::move(knot_x);
  c.y_ = std::move(knot_y);
  c.slope_ = std::move(m);
  c.kind_ = kind;
  return c;
}

double Curve::eval(double x) const { return eval_flagged(x).y; }

Curve::EvalResult Curve::eval_flagged(double x) const {
  if (x_.empty()) throw std::logic_error("eval on empty curve");
  if (x <= x_.front()) return {y_.front(), x < x_.front()};
  if (x >= x_.back()) return {y_.back(), x > x_.back()};
  const std::size_t k = find_interval(x_, x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double y = y_[k] * h00(t) + h * slope_[k] * h10(t) + y_[k + 1] * h00(1.0 - t) -
                   h * slope_[k + 1] * h10(1.0 - t);
  return {y, false};
}

bool Curve::strictly_monotone() const {
  if (y_.size() < 2) return false;
  const bool increasing = y_[1] > y_[0];
  for (std::size_t i = 1; i < y_.size(); ++i) {
    if (increasing ? !(y_[i] > y_[i - 1]) : !(y_[i] < y_[i - 1])) return false;
  }
  return true;
}

Curve::InvertResult Curve::invert_monotone(double y) const {
  if (!strictly_monotone()) throw std::domain_error("invert_monotone: curve not invertible");
  const bool increasing = y_.back() > y_.front();
  const double y_lo = increasing ? y_.front() : y_.back();
  const double y_hi = increasing ? y_.back() : y_.front();
  if (y <= y_lo) return {increasing ? x_.front() : x_.back(), y < y_lo};
  if (y >= y_hi) return {increasing ? x_.back() : x_.front(), y > y_hi};

  double lo = x_.front(), hi = x_.back();
  // monotone knots + monotone-preserving interpolant => eval is monotone
  for (int it = 0; it < 80 && (hi - lo) > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = eval(mid);
    if ((v < y) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

void Curve::write_csv(std::ostream& out, int samples) const {
  if (samples < 2) throw std::invalid_argument("write_csv: need at least 2 samples");
  if (kind_ == CurveKind::flow_rate)
    out << "time_s,flow_rate_ml_per_s\n";
  else
    out << "thickness_mm,volume_per_length_ml_per_cm\n";
  for (int i = 0; i < samples; ++i) {
    const double x = x_min() + (x_max() - x_min()) * i / (samples - 1);
    out << x << "," << eval(x) << "\n";
  }
}

double curve_error(const Curve& pred, const Curve& truth) {
  if (pred.kind() != truth.kind())
    throw std::invalid_argument("curve_error: curve kinds differ");
  const double lo = std::max(pred.x_min(), truth.x_min());
  const double hi = std::min(pred.x_max(), truth.x_max());
  if (!(hi > lo)) throw std::invalid_argument("curve_error: disjoint domains");
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double x = lo + (hi - lo) * i / 4.0;
    sum += std::abs(pred.eval(x) - truth.eval(x));
  }
  return sum / 5.0;
}

Curve flow_from_weights(const std::vector<double>& time_s,
                        const std::vector<double>& cumulative_g, double density_g_per_ml,
                        const Config& cfg) {
  if (time_s.size() != cumulative_g.size())
    throw std::invalid_argument("flow_from_weights: series length mismatch");
  if (time_s.size() < 3) throw std::invalid_argument("flow_from_weights: need at least 3 samples");
  if (!(density_g_per_ml > 0))
    throw std::invalid_argument("flow_from_weights: density must be positive");
  const std::size_t n = time_s.size();
  for (std::size_t i = 1; i < n; ++i)
    if (!(time_s[i] > time_s[i - 1]))
      throw std::invalid_argument("flow_from_weights: time must be strictly increasing");

  // central finite difference, one-sided at the ends
  std::vector<double> deriv(n);
  deriv[0] = (cumulative_g[1] - cumulative_g[0]) / (time_s[1] - time_s[0]);
  deriv[n - 1] = (cumulative_g[n - 1] - cumulative_g[n - 2]) / (time_s[n - 1] - time_s[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i)
    deriv[i] = (cumulative_g[i + 1] - cumulative_g[i - 1]) / (time_s[i + 1] - time_s[i - 1]);
  for (double& v : deriv) v /= density_g_per_ml;

  // centered moving average; window shrinks at the edges
  const int half = cfg.weight_smoothing_samples / 2;
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= static_cast<std::size_t>(half) ? i - half : 0;
    const std::size_t b = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t j = a; j <= b; ++j) s += deriv[j];
    smooth[i] = s / static_cast<double>(b - a + 1);
  }

  // resample at the knot seconds by linear interpolation in time
  auto sample_at = [&](double t) {
    if (t <= time_s.front()) return smooth.front();
    if (t >= time_s.back()) return smooth.back();
    const std::size_t k = find_interval(time_s, t);
    const double u = (t - time_s[k]) / (time_s[k + 1] - time_s[k]);
    return smooth[k] * (1.0 - u) + smooth[k + 1] * u;
  };

  std::vector<double> kx, ky;
  kx.reserve(cfg.flow_knot_count + 1);
  ky.reserve(cfg.flow_knot_count + 1);
  kx.push_back(0.0);
  ky.push_back(0.0);  // fixed anchor
  const double spacing = cfg.flow_knot_spacing_s();
  for (int k = 1; k <= cfg.flow_knot_count; ++k) {
    kx.push_back(k * spacing);
    ky.push_back(sample_at(k * spacing));
  }
  return Curve::fit_spline(std::move(kx), std::move(ky), CurveKind::flow_rate);
}

}  // namespace squeeze::curves
