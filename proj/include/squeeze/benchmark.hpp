#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "squeeze/config.hpp"
#include "squeeze/dataset.hpp"
#include "squeeze/neuralnet.hpp"

namespace squeeze::bench {

struct ModelSet {
  nn::MlpModel flow;
  nn::MlpModel stacking;
  nn::MlpModel pp_flow;
  nn::MlpModel pp_stacking;
};

// Loads flow.json / stacking.json / pp-flow.json / pp-stacking.json; throws
// std::runtime_error naming the missing file.
ModelSet load_models(const std::filesystem::path& dir, const std::set<std::string>& methods);

struct CurveErrorRow {
  std::string method, liquid;
  double fill_ml;
  double fc_error_ml_s;
  std::optional<double> sc_error_ml_cm;
};

struct ThicknessRow {
  std::string method, liquid;
  double fill_ml;
  double target_mm;
  double error_mm, std_mm, pct_error, pct_variance;
  int speed_clamp_events;
};

struct ThicknessSummary {
  double error_mm = 0.0, std_mm = 0.0, pct_error = 0.0, pct_variance = 0.0;
};

struct Report {
  std::int64_t seed = 0;
  std::vector<std::string> methods;
  std::map<std::string, double> fc_error;                 // mean per method
  std::map<std::string, std::optional<double>> sc_error;  // N/A for simple, wf
  std::map<std::string, ThicknessSummary> thickness;
  std::vector<CurveErrorRow> curve_rows;
  std::vector<ThicknessRow> thickness_rows;
};

// Full comparison over test liquids x benchmark fills: curve prediction
// errors per method plus the thickness-control table at the target grid.
// Deterministic given (models, config, seed).
Report run_benchmark(const ModelSet& models, const Config& cfg, std::int64_t seed,
                     const std::set<std::string>& methods);

std::string report_to_json(const Report& report);
std::string render_table(const Report& report);

}  // namespace squeeze::bench
