#pragma once

#include <vector>

#include "squeeze/config.hpp"
#include "squeeze/liquid_sim.hpp"

namespace squeeze::haptics {

// Fixed layout [rotation samples | oscillation spectrum | total weight],
// 10 + 22 + 1 = 33 entries with the default band.
struct LiquidFeature {
  std::vector<double> rotation;  // torque at 0.1 s spacing
  std::vector<double> spectrum;  // DFT magnitudes, 0.1..2.2 Hz
  double total_weight_g = 0.0;

  std::vector<double> as_vector() const;
  std::size_t length() const { return rotation.size() + spectrum.size() + 1; }
};

// Trace value nearest to each t in {0.1, 0.2, ..., 1.0} s.
std::vector<double> downsample_rotation(const sim::HapticTrace& trace, const Config& cfg);

// Mean-removed DFT magnitudes over the 10 s pause, bins 0.1..2.2 Hz at the
// window resolution (0.1 Hz). Scaled 2/N so an on-bin unit sinusoid reads 1.
std::vector<double> oscillation_spectrum(const sim::HapticTrace& trace, const Config& cfg);

LiquidFeature extract_feature(const sim::HapticTrace& trace, double total_weight_g,
                              const Config& cfg);

}  // namespace squeeze::haptics
