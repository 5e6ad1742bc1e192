// squeeze: open-loop viscous-liquid dispensing toolkit.
//
// Subcommands: gen-data, train, predict, benchmark, draw.
// Exit codes: 0 success, 1 domain error, 2 usage or I/O error.

#include <cstdio>
#include <exception>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "squeeze/cli.hpp"

namespace {

squeeze::Config load_config(const std::string& path) {
  if (path.empty()) return squeeze::Config{};
  return squeeze::Config::load(path);
}

std::set<std::string> parse_methods(const std::string& methods) {
  std::set<std::string> out;
  std::stringstream ss(methods);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"squeeze: exploration-driven open-loop liquid dispensing toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global --config/--seed may follow the subcommand

  std::string config_path;
  std::int64_t seed = 42;
  app.add_option("--config", config_path, "flat JSON config file")->capture_default_str();
  app.add_option("--seed", seed, "master seed")->capture_default_str();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate the training dataset (JSON lines)");
  std::string gen_out = "dataset.jsonl";
  gen->add_option("--out", gen_out, "output dataset path")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train one of the predictors");
  std::string train_dataset, train_which = "flow", train_out = "model.json", train_loss;
  train->add_option("--dataset", train_dataset, "dataset JSONL")->required();
  train->add_option("--which", train_which, "flow|stacking|pp-flow|pp-stacking")
      ->capture_default_str();
  train->add_option("--out", train_out, "output model JSON")->capture_default_str();
  train->add_option("--loss-csv", train_loss, "optional loss history CSV");

  // predict
  auto* predict = app.add_subcommand("predict", "predict curves for one grid liquid");
  std::string pred_models, pred_liquid, pred_out = "prediction";
  double pred_fill = 300.0;
  bool pred_truth = false;
  predict->add_option("--models", pred_models, "directory with flow.json/stacking.json");
  predict->add_flag("--truth", pred_truth, "use simulator ground-truth curves");
  predict->add_option("--liquid", pred_liquid, "grid liquid name, e.g. test-02")->required();
  predict->add_option("--fill", pred_fill, "fill level (ml)")->capture_default_str();
  double pred_target = 0.0;
  auto* pred_target_opt =
      predict->add_option("--target-mm", pred_target, "also run one episode at this thickness");
  predict->add_option("--out", pred_out, "output base path")->capture_default_str();

  // benchmark
  auto* benchc = app.add_subcommand("benchmark", "run the comparison benchmark");
  std::string bench_models, bench_out = "report.json", bench_methods = "ours,simple,pp,wf";
  bool bench_table = false;
  benchc->add_option("--models", bench_models, "model directory")->required();
  benchc->add_option("--methods", bench_methods, "comma list of ours,simple,pp,wf")
      ->capture_default_str();
  benchc->add_option("--out", bench_out, "output report JSON")->capture_default_str();
  benchc->add_flag("--table", bench_table, "print the human-readable tables");

  // draw
  auto* draw = app.add_subcommand("draw", "plan and render a multi-stroke drawing");
  std::string draw_file, draw_models, draw_svg = "out.svg", draw_metrics;
  double draw_fill = 400.0;
  bool draw_truth = false;
  draw->add_option("--drawing", draw_file, "drawing JSON")->required();
  draw->add_option("--models", draw_models, "model directory");
  draw->add_flag("--truth", draw_truth, "use simulator ground-truth curves");
  draw->add_option("--fill", draw_fill, "bottle fill per squeeze cycle (ml)")
      ->capture_default_str();
  draw->add_option("--out", draw_svg, "output SVG path")->capture_default_str();
  draw->add_option("--metrics", draw_metrics, "optional per-stroke metrics JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors exit 2; --help stays 0
  }

  try {
    const squeeze::Config cfg = load_config(config_path);
    cfg.validate();
    if (seed < 0) throw std::runtime_error("--seed must be non-negative");

    if (gen->parsed()) {
      squeeze::cli::cmd_gen_data(cfg, seed, gen_out);
    } else if (train->parsed()) {
      squeeze::cli::cmd_train(train_dataset, train_which, cfg, seed, train_out,
                              train_loss.empty()
                                  ? std::nullopt
                                  : std::optional<std::filesystem::path>(train_loss));
    } else if (predict->parsed()) {
      squeeze::cli::cmd_predict(pred_models.empty()
                                    ? std::nullopt
                                    : std::optional<std::filesystem::path>(pred_models),
                                pred_truth, pred_liquid, pred_fill, cfg, seed, pred_out,
                                pred_target_opt->count() ? std::optional<double>(pred_target)
                                                         : std::nullopt);
    } else if (benchc->parsed()) {
      squeeze::cli::cmd_benchmark(bench_models, cfg, seed, parse_methods(bench_methods),
                                  bench_out, bench_table);
    } else if (draw->parsed()) {
      squeeze::cli::cmd_draw(draw_file,
                             draw_models.empty()
                                 ? std::nullopt
                                 : std::optional<std::filesystem::path>(draw_models),
                             draw_truth, draw_fill, cfg, seed, draw_svg,
                             draw_metrics.empty()
                                 ? std::nullopt
                                 : std::optional<std::filesystem::path>(draw_metrics));
    }
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
