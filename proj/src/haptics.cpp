#include "squeeze/haptics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace squeeze::haptics {

std::vector<double> LiquidFeature::as_vector() const {
  std::vector<double> v;
  v.reserve(length());
  v.insert(v.end(), rotation.begin(), rotation.end());
  v.insert(v.end(), spectrum.begin(), spectrum.end());
  v.push_back(total_weight_g);
  return v;
}

std::vector<double> downsample_rotation(const sim::HapticTrace& trace, const Config& cfg) {
  const auto& rot = trace.rotation_torque;
  if (rot.empty()) throw std::invalid_argument("downsample_rotation: empty rotation segment");
  const double dt = 1.0 / trace.sample_rate_hz;
  const int n = cfg.rotation_feature_samples;
  const double spacing = cfg.rotation_duration_s / n;

  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    const double t = (k + 1) * spacing;
    const long idx = std::lround(t / dt);
    out[k] = rot[static_cast<std::size_t>(
        std::min<long>(std::max<long>(idx, 0), static_cast<long>(rot.size()) - 1))];
  }
  return out;
}

std::vector<double> oscillation_spectrum(const sim::HapticTrace& trace, const Config& cfg) {
  const auto& osc = trace.oscillation_torque;
  const std::size_t expected =
      static_cast<std::size_t>(std::lround(cfg.pause_duration_s * trace.sample_rate_hz));
  if (osc.size() != expected)
    throw std::invalid_argument("oscillation_spectrum: wrong sample count");

  const std::size_t n = osc.size();
  double mean = 0.0;
  for (double v : osc) mean += v;
  mean /= static_cast<double>(n);

  // Direct DFT at the band bins with a phasor recurrence; keeps the bin
  // frequencies exact and avoids 2N trig calls per bin.
  const double resolution = 1.0 / cfg.pause_duration_s;
  const int bins = cfg.spectrum_bin_count();
  const int k0 = static_cast<int>(std::lround(cfg.spectrum_min_hz / resolution));
  std::vector<double> mags(bins);
  for (int b = 0; b < bins; ++b) {
    const int k = k0 + b;
    const double w = 2.0 * std::numbers::pi * k / static_cast<double>(n);
    const double cw = std::cos(w), sw = std::sin(w);
    double pr = 1.0, pi = 0.0;  // e^{-i w n}, stepped by multiplication
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = osc[i] - mean;
      re += x * pr;
      im -= x * pi;
      const double nr = pr * cw - pi * sw;
      pi = pr * sw + pi * cw;
      pr = nr;
    }
    mags[b] = 2.0 / static_cast<double>(n) * std::hypot(re, im);
  }
  return mags;
}

LiquidFeature extract_feature(const sim::HapticTrace& trace, double total_weight_g,
                              const Config& cfg) {
  if (!(total_weight_g > 0))
    throw std::invalid_argument("extract_feature: weight must be positive");
  LiquidFeature f;
  f.rotation = downsample_rotation(trace, cfg);
  f.spectrum = oscillation_spectrum(trace, cfg);
  f.total_weight_g = total_weight_g;
  for (double v : f.as_vector())
    if (!std::isfinite(v)) throw std::invalid_argument("extract_feature: non-finite entry");
  return f;
}

}  // namespace squeeze::haptics
