#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "squeeze/config.hpp"
#include "squeeze/liquid_sim.hpp"

namespace squeeze::dataset {

// 20 training liquids log-spaced over the viscosity span with densities
// cycling; 5 test liquids at geometric midpoints of chosen training pairs;
// 21 fill levels evenly spaced 130..500 ml.
struct ExperimentGrid {
  std::vector<sim::LiquidSpec> training;
  std::vector<sim::LiquidSpec> testing;
  std::vector<double> fills_ml;

  static ExperimentGrid from_config(const Config& cfg);
  const sim::LiquidSpec* find(const std::string& name) const;
};

struct Row {
  std::string liquid;
  double viscosity_cp = 0.0;
  double density_g_per_ml = 0.0;
  double fill_ml = 0.0;
  std::vector<double> feature;
  std::vector<double> flow_label;                   // 17 knots, t = 1..17 s
  std::optional<std::vector<double>> stacking_label;  // absent below 50 cP
  std::uint64_t row_seed = 0;
};

struct Dataset {
  std::vector<Row> rows;
};

// One row per (training liquid, fill): exploration trace -> feature,
// dispense -> weight-derived flow labels, exact stacking knots where defined.
Dataset generate(const Config& cfg, std::int64_t seed);

void save_jsonl(const Dataset& ds, const std::filesystem::path& file);
Dataset load_jsonl(const std::filesystem::path& file);

}  // namespace squeeze::dataset
