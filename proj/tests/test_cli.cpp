#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "squeeze/cli.hpp"
#include "squeeze/lineart.hpp"

using namespace squeeze;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "squeeze_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

Config small_config() {
  Config cfg;
  cfg.grid_train_liquids = 6;
  cfg.grid_fill_count = 4;
  cfg.grid_test_pair_indices = {3};
  cfg.nn_epochs = 40;
  cfg.nn_hidden_dims = {24, 12};
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// run the installed CLI binary; returns the exit code or -1 when unavailable
int run_cli(const std::string& args) {
  const char* bin = std::getenv("SQUEEZE_CLI_BIN");
  if (!bin) return -1;
  const std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

}  // namespace

TEST_CASE("samples_for assembles the right shapes") {
  const Config cfg = small_config();
  const auto ds = dataset::generate(cfg, 3);

  const auto flow = cli::samples_for(ds, "flow");
  CHECK(flow.size() == ds.rows.size());
  CHECK(flow[0].x.size() == 33);
  CHECK(flow[0].y.size() == 17);

  const auto stacking = cli::samples_for(ds, "stacking");
  CHECK(stacking.size() < ds.rows.size());  // watery rows dropped
  CHECK(stacking[0].y.size() == 10);

  const auto pp = cli::samples_for(ds, "pp-flow");
  CHECK(pp[0].x.size() == 2);
  CHECK(pp[0].x[1] == ds.rows[0].fill_ml);

  CHECK_THROWS_AS(cli::samples_for(ds, "bogus"), std::invalid_argument);
}

TEST_CASE("gen-data and train round-trip through files") {
  const Config cfg = small_config();
  const auto dir = temp_dir();
  const auto ds_path = dir / "ds.jsonl";
  cli::cmd_gen_data(cfg, 21, ds_path);

  const auto outcome =
      cli::cmd_train(ds_path, "flow", cfg, 21, dir / "flow.json", dir / "loss.csv");

  SUBCASE("saved model forwards identically to a reload") {
    const auto model = nn::load_model(dir / "flow.json");
    CHECK(model.which == "flow");
    CHECK(model.in_dim() == 33);
    CHECK(model.out_dim() == 17);
    const auto ds = dataset::load_jsonl(ds_path);
    const auto again = nn::load_model(dir / "flow.json");
    for (int i = 0; i < 3; ++i)
      CHECK(model.forward(ds.rows[i].feature) == again.forward(ds.rows[i].feature));
  }
  SUBCASE("printed held-out error matches recomputation from the files") {
    const auto model = nn::load_model(dir / "flow.json");
    const auto ds = dataset::load_jsonl(ds_path);
    const double recomputed = cli::holdout_curve_error(model, ds, cfg);
    CHECK(std::abs(recomputed - outcome.holdout_curve_error) < 1e-9);
  }
  SUBCASE("pp variants record their input width in the model header") {
    cli::cmd_train(ds_path, "pp-flow", cfg, 22, dir / "ppf.json", std::nullopt);
    CHECK(nn::load_model(dir / "ppf.json").in_dim() == 2);
  }
  SUBCASE("loss history has one row per epoch") {
    const auto text = slurp(dir / "loss.csv");
    int lines = 0;
    for (char c : text)
      if (c == '\n') ++lines;
    CHECK(lines == cfg.nn_epochs + 1);
  }
}

TEST_CASE("the shipped sample drawing renders clamp-free with truth curves") {
  const Config cfg;  // full default grid
  const auto dir = temp_dir();
  const auto svg_path = dir / "sample.svg";
  cli::cmd_draw(std::filesystem::path(SQUEEZE_DATA_DIR) / "sample_drawing.json", std::nullopt,
                /*use_truth_curves=*/true, 400.0, cfg, 42, svg_path, dir / "sample_metrics.json");
  const auto svg = slurp(svg_path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("liquid-test-02") != std::string::npos);

  // re-plan directly and assert no clamp events
  const auto drawing =
      lineart::load_drawing(std::filesystem::path(SQUEEZE_DATA_DIR) / "sample_drawing.json");
  const auto grid = dataset::ExperimentGrid::from_config(cfg);
  std::map<std::string, lineart::LiquidCurves> curves;
  for (const auto& p : drawing.polylines) {
    const auto* spec = grid.find(p.liquid);
    REQUIRE(spec != nullptr);
    const sim::BottleState bottle{cfg.capacity_ml, 400.0, cfg.bottle_tare_g};
    curves[p.liquid] = {
        sim::true_flow_rate_curve(*spec, bottle, sim::SqueezeProfile::two_stage(cfg), cfg),
        sim::true_stacking_curve(*spec, cfg)};
  }
  const auto traj = lineart::plan_trajectory(drawing, curves, cfg);
  for (const auto& stroke : traj.strokes) CHECK(stroke.profile.clamps.empty());
}

TEST_CASE("CLI exit codes") {
  const char* bin = std::getenv("SQUEEZE_CLI_BIN");
  if (!bin) return;  // only meaningful under ctest, which sets the path

  const auto dir = temp_dir();
  SUBCASE("missing model file exits 2 and names the file") {
    const int code = run_cli("benchmark --models " + (dir / "nope").string() + " --out " +
                             (dir / "r.json").string());
    CHECK(code == 2);
  }
  SUBCASE("domain errors exit 1") {
    // liquid outside the grid
    const int code =
        run_cli("predict --truth --liquid no-such-liquid --out " + (dir / "p").string());
    CHECK(code == 1);
  }
  SUBCASE("negative seed exits 2") {
    const int code = run_cli("gen-data --seed -4 --out " + (dir / "d.jsonl").string());
    CHECK(code == 2);
  }
  SUBCASE("success exits 0") {
    const auto cfg_path = dir / "small.json";
    Config cfg = small_config();
    cfg.save(cfg_path);
    const int code = run_cli("gen-data --config " + cfg_path.string() + " --seed 3 --out " +
                             (dir / "ok.jsonl").string());
    CHECK(code == 0);
  }
}

TEST_CASE("config files round-trip and reject unknown keys") {
  const auto dir = temp_dir();
  Config cfg;
  cfg.nozzle_yield_kpa = 5.5;
  cfg.nn_epochs = 123;
  cfg.save(dir / "cfg.json");
  const auto loaded = Config::load(dir / "cfg.json");
  CHECK(loaded.nozzle_yield_kpa == 5.5);
  CHECK(loaded.nn_epochs == 123);
  CHECK(loaded.grid_densities == cfg.grid_densities);

  Config c2;
  CHECK_THROWS_AS(c2.apply_flat_json("{\"sim.not_a_key\": 1}"), std::runtime_error);
  CHECK_THROWS_AS(c2.apply_flat_json("{\"nn.lr_decay\": 1.5}"), std::domain_error);
  CHECK_THROWS_AS(c2.apply_flat_json("not json"), std::runtime_error);
}

TEST_CASE("the shipped default config matches the built-in defaults") {
  const auto loaded = Config::load(std::filesystem::path(SQUEEZE_DATA_DIR) / "default_config.json");
  const Config defaults;
  CHECK(loaded.nozzle_coeff == defaults.nozzle_coeff);
  CHECK(loaded.torque_noise_sigma_nm == defaults.torque_noise_sigma_nm);
  CHECK(loaded.grid_test_pair_indices == defaults.grid_test_pair_indices);
  CHECK(loaded.to_flat_json() == defaults.to_flat_json());
}

TEST_CASE("predict writes curve knots and dense CSVs") {
  const Config cfg;
  const auto dir = temp_dir();
  cli::cmd_predict(std::nullopt, /*use_truth_curves=*/true, "test-01", 300.0, cfg, 5,
                   dir / "pred");
  const auto j = slurp(dir / "pred.json");
  CHECK(j.find("\"flow_knot_y\"") != std::string::npos);
  const auto flow_csv = slurp(dir / "pred-flow.csv");
  CHECK(flow_csv.rfind("time_s,flow_rate_ml_per_s", 0) == 0);
  const auto st_csv = slurp(dir / "pred-stacking.csv");
  CHECK(st_csv.rfind("thickness_mm,volume_per_length_ml_per_cm", 0) == 0);

  SUBCASE("with a target thickness it also writes an episode report") {
    cli::cmd_predict(std::nullopt, true, "test-01", 300.0, cfg, 5, dir / "pred2", 10.0);
    const auto ep = slurp(dir / "pred2-episode.json");
    CHECK(ep.find("\"pct_error\"") != std::string::npos);
    CHECK(ep.find("\"rho_star_ml_cm\"") != std::string::npos);
  }
}
