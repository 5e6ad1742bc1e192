#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include "squeeze/benchmark.hpp"
#include "squeeze/config.hpp"
#include "squeeze/dataset.hpp"
#include "squeeze/neuralnet.hpp"

namespace squeeze::cli {

// Command bodies, shared by the binary and the test suites. All of them are
// deterministic given (seed, config, input files) and write files atomically
// enough for byte-for-byte comparison.

void cmd_gen_data(const Config& cfg, std::int64_t seed, const std::filesystem::path& out);

struct TrainOutcome {
  double holdout_curve_error;  // NaN when there is no validation split
  std::string model_path;
};
TrainOutcome cmd_train(const std::filesystem::path& dataset_file, const std::string& which,
                       const Config& cfg, std::int64_t seed,
                       const std::filesystem::path& out_model,
                       const std::optional<std::filesystem::path>& loss_csv);

// Mean 5-point curve error of `model` on the dataset rows belonging to the
// model's recorded held-out liquids.
double holdout_curve_error(const nn::MlpModel& model, const dataset::Dataset& ds,
                           const Config& cfg);

bench::Report cmd_benchmark(const std::filesystem::path& models_dir, const Config& cfg,
                            std::int64_t seed, const std::set<std::string>& methods,
                            const std::filesystem::path& out_report, bool print_table);

void cmd_draw(const std::filesystem::path& drawing_file,
              const std::optional<std::filesystem::path>& models_dir, bool use_truth_curves,
              double fill_ml, const Config& cfg, std::int64_t seed,
              const std::filesystem::path& out_svg,
              const std::optional<std::filesystem::path>& out_metrics);

// With a target thickness, also runs one full open-loop episode against the
// simulator and writes <out_base>-episode.json.
void cmd_predict(const std::optional<std::filesystem::path>& models_dir, bool use_truth_curves,
                 const std::string& liquid_name, double fill_ml, const Config& cfg,
                 std::int64_t seed, const std::filesystem::path& out_base,
                 std::optional<double> target_mm = std::nullopt);

// Builds (x, y, group) samples for one of flow | stacking | pp-flow |
// pp-stacking from a dataset.
std::vector<nn::Sample> samples_for(const dataset::Dataset& ds, const std::string& which);

}  // namespace squeeze::cli
