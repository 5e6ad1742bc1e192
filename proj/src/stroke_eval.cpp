#include "squeeze/stroke_eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "squeeze/pipeline.hpp"

namespace squeeze::stroke_eval {

RhoProfile deposit(const pipeline::SpeedProfile& profile, const sim::DispenseLog& log,
                   double path_length_cm, const Config& cfg) {
  if (!(path_length_cm > 0)) throw std::invalid_argument("deposit: zero-length path");
  if (log.dense_time_s.size() < 2)
    throw std::invalid_argument("deposit: dispense log too short");
  if (profile.t_start_s < log.dense_time_s.front() - 1e-9 ||
      profile.t_end_s > log.dense_time_s.back() + 1e-9)
    throw std::invalid_argument("deposit: profile window not covered by the dispense log");

  const double ds = cfg.stroke_ds_cm;
  RhoProfile out;
  out.ds_cm = ds;
  out.rho_ml_cm.assign(static_cast<std::size_t>(std::ceil(path_length_cm / ds)) + 1, 0.0);

  auto add_volume = [&](double s0, double s1, double vol) {
    // spread vol uniformly over [s0, s1] across cell boundaries
    if (vol <= 0.0) return;
    if (s1 <= s0) {  // stationary nozzle: all volume lands in one cell
      const std::size_t c = std::min(out.rho_ml_cm.size() - 1,
                                     static_cast<std::size_t>(s0 / ds));
      out.rho_ml_cm[c] += vol / ds;
      return;
    }
    const double inv_len = 1.0 / (s1 - s0);
    std::size_t c = static_cast<std::size_t>(s0 / ds);
    double pos = s0;
    while (pos < s1 - 1e-15 && c < out.rho_ml_cm.size()) {
      const double cell_end = (static_cast<double>(c) + 1.0) * ds;
      const double seg_end = std::min(cell_end, s1);
      out.rho_ml_cm[c] += vol * (seg_end - pos) * inv_len / ds;
      pos = seg_end;
      ++c;
    }
  };

  const double dt = log.dense_time_s[1] - log.dense_time_s[0];
  const std::size_t n = log.dense_time_s.size();
  double s = 0.0;
  double deposited = 0.0;
  double flow_integral = 0.0;
  bool done = false;

  for (std::size_t i = 0; i + 1 < n && !done; ++i) {
    const double t = log.dense_time_s[i];
    if (t + dt <= profile.t_start_s + 1e-12) continue;
    if (t >= profile.t_end_s - 1e-12) break;
    const double v = profile.speed_at(t);
    double dvol = log.dense_dispensed_ml[i + 1] - log.dense_dispensed_ml[i];
    double dstep = v * dt;
    if (s + dstep >= path_length_cm) {
      const double f = dstep > 0.0 ? (path_length_cm - s) / dstep : 1.0;
      dstep = path_length_cm - s;
      dvol *= f;
      done = true;
    }
    add_volume(s, s + dstep, dvol);
    s += dstep;
    deposited += dvol;
    flow_integral += dvol;
  }

  out.traversed_cm = s;
  out.deposited_ml = deposited;
  out.flow_integral_ml = flow_integral;
  // keep the final partial cell: metrics trim it, conservation needs it
  const std::size_t cells = static_cast<std::size_t>(std::ceil(s / ds - 1e-9));
  out.rho_ml_cm.resize(std::max<std::size_t>(std::min(cells, out.rho_ml_cm.size()), 1));
  return out;
}

ThicknessProfile thickness_profile(const RhoProfile& rho, const curves::Curve& stacking_truth) {
  if (!stacking_truth.strictly_monotone())
    throw std::domain_error("thickness_profile: stacking curve not invertible");
  ThicknessProfile out;
  out.mm.reserve(rho.rho_ml_cm.size());
  for (double r : rho.rho_ml_cm) {
    const auto inv = stacking_truth.invert_monotone(r);
    out.mm.push_back(inv.x);
    if (inv.clamped) ++out.clamped_cells;
  }
  return out;
}

StrokeMetrics stroke_metrics(const ThicknessProfile& thickness, double target_mm,
                             const Config& cfg) {
  if (thickness.mm.size() < 10)
    throw std::invalid_argument("stroke_metrics: need at least 10 cells");
  if (!(target_mm > 0)) throw std::invalid_argument("stroke_metrics: target must be positive");

  const std::size_t trim =
      static_cast<std::size_t>(std::lround(cfg.stroke_edge_trim_cm / cfg.stroke_ds_cm));
  std::size_t a = trim, b = thickness.mm.size() - trim;
  if (b <= a) {  // stroke shorter than twice the trim: use everything
    a = 0;
    b = thickness.mm.size();
  }

  StrokeMetrics m;
  m.cells_used = static_cast<int>(b - a);
  double sum = 0.0, err = 0.0;
  for (std::size_t i = a; i < b; ++i) {
    sum += thickness.mm[i];
    err += std::abs(thickness.mm[i] - target_mm);
  }
  const double n = static_cast<double>(m.cells_used);
  const double mean = sum / n;
  double var = 0.0;
  for (std::size_t i = a; i < b; ++i) {
    const double c = thickness.mm[i] - mean;
    var += c * c;
  }
  m.mean_abs_error_mm = err / n;
  m.std_dev_mm = std::sqrt(var / n);
  m.pct_error = 100.0 * m.mean_abs_error_mm / target_mm;
  m.pct_variance = 100.0 * m.std_dev_mm / target_mm;
  return m;
}

void write_stroke_csv(std::ostream& out, const StrokeResult& stroke) {
  out << "s_cm,rho_ml_per_cm,thickness_mm\n";
  const std::size_t n = std::min(stroke.rho.rho_ml_cm.size(), stroke.thickness.mm.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double s = (static_cast<double>(i) + 0.5) * stroke.rho.ds_cm;
    out << s << "," << stroke.rho.rho_ml_cm[i] << "," << stroke.thickness.mm[i] << "\n";
  }
}

}  // namespace squeeze::stroke_eval
