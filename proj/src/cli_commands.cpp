#include "squeeze/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "squeeze/baselines.hpp"
#include "squeeze/haptics.hpp"
#include "squeeze/lineart.hpp"
#include "squeeze/pipeline.hpp"
#include "squeeze/rng.hpp"

namespace squeeze::cli {

namespace {

constexpr std::uint64_t kPredictStream = 0x50524544ull;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

curves::Curve flow_curve_from_label(const std::vector<double>& knots, const Config& cfg) {
  std::vector<double> kx{0.0}, ky{0.0};
  const double spacing = cfg.flow_knot_spacing_s();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    kx.push_back(static_cast<double>(k + 1) * spacing);
    ky.push_back(knots[k]);
  }
  return curves::Curve::fit_spline(std::move(kx), std::move(ky), curves::CurveKind::flow_rate);
}

curves::Curve stacking_curve_from_label(const std::vector<double>& knots, const Config& cfg) {
  std::vector<double> kx(knots.size());
  for (std::size_t i = 0; i < kx.size(); ++i)
    kx[i] = cfg.stacking_knot_min_mm + (cfg.stacking_knot_max_mm - cfg.stacking_knot_min_mm) *
                                           static_cast<double>(i) /
                                           static_cast<double>(kx.size() - 1);
  return curves::Curve::fit_spline(std::move(kx), std::vector<double>(knots),
                                   curves::CurveKind::stacking);
}

// Resolve a liquid's predicted or ground-truth curves for draw/predict.
lineart::LiquidCurves curves_for_liquid(const sim::LiquidSpec& liquid, double fill_ml,
                                        const bench::ModelSet* models, bool use_truth,
                                        std::int64_t seed, const Config& cfg) {
  const sim::BottleState bottle{cfg.capacity_ml, fill_ml, cfg.bottle_tare_g};
  if (use_truth) {
    return {sim::true_flow_rate_curve(liquid, bottle, sim::SqueezeProfile::two_stage(cfg), cfg),
            sim::true_stacking_curve(liquid, cfg)};
  }
  const auto trace = sim::simulate_exploration(liquid, bottle, seed, cfg);
  const double weight = bottle.bottle_mass_g + bottle.fill_ml * liquid.density_g_per_ml;
  const auto feature = haptics::extract_feature(trace, weight, cfg);
  auto pred = pipeline::predict_curves(feature, models->flow, models->stacking, cfg);
  return {std::move(pred.flow), std::move(pred.stacking)};
}

}  // namespace

void cmd_gen_data(const Config& cfg, std::int64_t seed, const std::filesystem::path& out) {
  const auto ds = dataset::generate(cfg, seed);
  dataset::save_jsonl(ds, out);
  int without_stacking = 0;
  for (const auto& r : ds.rows)
    if (!r.stacking_label) ++without_stacking;
  std::printf("wrote %zu rows to %s (%d without stacking labels)\n", ds.rows.size(),
              out.string().c_str(), without_stacking);
}

std::vector<nn::Sample> samples_for(const dataset::Dataset& ds, const std::string& which) {
  const bool pp = which.rfind("pp-", 0) == 0;
  const bool stacking = which == "stacking" || which == "pp-stacking";
  if (which != "flow" && which != "stacking" && which != "pp-flow" && which != "pp-stacking")
    throw std::invalid_argument("unknown model kind '" + which + "'");

  std::vector<nn::Sample> samples;
  for (const auto& r : ds.rows) {
    if (stacking && !r.stacking_label) continue;
    nn::Sample s;
    s.group = r.liquid;
    if (pp)
      s.x = {std::log10(r.viscosity_cp), r.fill_ml};
    else
      s.x = r.feature;
    s.y = stacking ? *r.stacking_label : r.flow_label;
    samples.push_back(std::move(s));
  }
  if (samples.empty())
    throw std::domain_error("dataset has no rows with labels for '" + which + "'");
  return samples;
}

double holdout_curve_error(const nn::MlpModel& model, const dataset::Dataset& ds,
                           const Config& cfg) {
  const bool stacking = model.which == "stacking" || model.which == "pp-stacking";
  const bool pp = model.which.rfind("pp-", 0) == 0;
  double sum = 0.0;
  int n = 0;
  for (const auto& r : ds.rows) {
    bool held = false;
    for (const auto& g : model.held_out_groups) held = held || g == r.liquid;
    if (!held) continue;
    if (stacking && !r.stacking_label) continue;
    std::vector<double> x = pp ? std::vector<double>{std::log10(r.viscosity_cp), r.fill_ml}
                               : r.feature;
    const auto y = model.forward(x);
    if (stacking) {
      sum += curves::curve_error(stacking_curve_from_label(y, cfg),
                                 stacking_curve_from_label(*r.stacking_label, cfg));
    } else {
      std::vector<double> yc = y;
      for (double& v : yc) v = std::max(0.0, v);
      sum += curves::curve_error(flow_curve_from_label(yc, cfg),
                                 flow_curve_from_label(r.flow_label, cfg));
    }
    ++n;
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

TrainOutcome cmd_train(const std::filesystem::path& dataset_file, const std::string& which,
                       const Config& cfg, std::int64_t seed,
                       const std::filesystem::path& out_model,
                       const std::optional<std::filesystem::path>& loss_csv) {
  const auto ds = dataset::load_jsonl(dataset_file);
  const auto samples = samples_for(ds, which);

  auto result = nn::train(samples, nn::TrainConfig::from(cfg, seed));
  result.model.which = which;
  result.model.held_out_groups = result.held_out_groups;
  nn::save_model(result.model, out_model);
  if (loss_csv) nn::save_loss_csv(result, *loss_csv);

  TrainOutcome outcome;
  outcome.model_path = out_model.string();
  outcome.holdout_curve_error = holdout_curve_error(result.model, ds, cfg);
  std::printf("trained %s (in=%d, out=%d), final train loss %.6g, held-out 5-point error %.12g\n",
              which.c_str(), result.model.in_dim(), result.model.out_dim(),
              result.train_loss.back(), outcome.holdout_curve_error);
  return outcome;
}

bench::Report cmd_benchmark(const std::filesystem::path& models_dir, const Config& cfg,
                            std::int64_t seed, const std::set<std::string>& methods,
                            const std::filesystem::path& out_report, bool print_table) {
  const auto models = bench::load_models(models_dir, methods);
  const auto report = bench::run_benchmark(models, cfg, seed, methods);
  write_file(out_report, bench::report_to_json(report));
  if (print_table) std::fputs(bench::render_table(report).c_str(), stdout);
  return report;
}

void cmd_draw(const std::filesystem::path& drawing_file,
              const std::optional<std::filesystem::path>& models_dir, bool use_truth_curves,
              double fill_ml, const Config& cfg, std::int64_t seed,
              const std::filesystem::path& out_svg,
              const std::optional<std::filesystem::path>& out_metrics) {
  const auto drawing = lineart::load_drawing(drawing_file);
  const auto grid = dataset::ExperimentGrid::from_config(cfg);

  bench::ModelSet models;
  if (!use_truth_curves) {
    if (!models_dir) throw std::runtime_error("draw: need --models or --truth");
    models = bench::load_models(*models_dir, {"ours"});
  }

  std::map<std::string, lineart::LiquidCurves> curves_by_liquid;
  std::map<std::string, sim::LiquidSpec> liquids;
  for (const auto& p : drawing.polylines) {
    if (curves_by_liquid.count(p.liquid)) continue;
    const auto* spec = grid.find(p.liquid);
    if (!spec) throw std::domain_error("draw: liquid '" + p.liquid + "' not in the grid");
    const auto s = static_cast<std::int64_t>(
        seed_mix({static_cast<std::uint64_t>(seed), kPredictStream,
                  std::hash<std::string>{}(p.liquid)}) >> 1);
    curves_by_liquid[p.liquid] =
        curves_for_liquid(*spec, fill_ml, use_truth_curves ? nullptr : &models,
                          use_truth_curves, s, cfg);
    liquids[p.liquid] = *spec;
  }

  const auto traj = lineart::plan_trajectory(drawing, curves_by_liquid, cfg);
  const auto rendered = lineart::render_result(traj, drawing, liquids, fill_ml, seed, cfg);
  write_file(out_svg, rendered.svg);

  if (out_metrics) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "draw-metrics";
    j["path_count"] = rendered.path_count;
    nlohmann::json strokes = nlohmann::json::array();
    for (const auto& s : rendered.strokes)
      strokes.push_back({{"polyline", s.polyline_index},
                         {"target_mm", s.stroke.target_mm},
                         {"mean_abs_error_mm", s.stroke.metrics.mean_abs_error_mm},
                         {"std_dev_mm", s.stroke.metrics.std_dev_mm},
                         {"pct_error", s.stroke.metrics.pct_error},
                         {"pct_variance", s.stroke.metrics.pct_variance}});
    j["strokes"] = strokes;
    write_file(*out_metrics, j.dump(2) + "\n");
    for (std::size_t k = 0; k < rendered.strokes.size(); ++k) {
      std::ostringstream csv;
      stroke_eval::write_stroke_csv(csv, rendered.strokes[k].stroke);
      auto path = *out_metrics;
      path.replace_extension("");
      write_file(path.string() + "-stroke-" + std::to_string(k) + ".csv", csv.str());
    }
  }
  std::printf("rendered %d paths over %zu strokes to %s\n", rendered.path_count,
              rendered.strokes.size(), out_svg.string().c_str());
}

void cmd_predict(const std::optional<std::filesystem::path>& models_dir, bool use_truth_curves,
                 const std::string& liquid_name, double fill_ml, const Config& cfg,
                 std::int64_t seed, const std::filesystem::path& out_base,
                 std::optional<double> target_mm) {
  const auto grid = dataset::ExperimentGrid::from_config(cfg);
  const auto* spec = grid.find(liquid_name);
  if (!spec) throw std::domain_error("predict: liquid '" + liquid_name + "' not in the grid");

  bench::ModelSet models;
  if (!use_truth_curves) {
    if (!models_dir) throw std::runtime_error("predict: need --models or --truth");
    models = bench::load_models(*models_dir, {"ours"});
  }
  const auto lc = curves_for_liquid(*spec, fill_ml, use_truth_curves ? nullptr : &models,
                                    use_truth_curves, seed, cfg);

  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "prediction";
  j["liquid"] = liquid_name;
  j["fill_ml"] = fill_ml;
  j["truth_curves"] = use_truth_curves;
  j["flow_knot_x"] = lc.flow.knot_x();
  j["flow_knot_y"] = lc.flow.knot_y();
  j["stacking_knot_x"] = lc.stacking.knot_x();
  j["stacking_knot_y"] = lc.stacking.knot_y();
  write_file(out_base.string() + ".json", j.dump(2) + "\n");

  std::ostringstream flow_csv, stacking_csv;
  lc.flow.write_csv(flow_csv);
  lc.stacking.write_csv(stacking_csv);
  write_file(out_base.string() + "-flow.csv", flow_csv.str());
  write_file(out_base.string() + "-stacking.csv", stacking_csv.str());

  if (target_mm) {
    const sim::BottleState bottle{cfg.capacity_ml, fill_ml, cfg.bottle_tare_g};
    const auto ep = pipeline::run_episode_with_curves(
        *spec, bottle, lc.flow, lc.stacking, sim::SqueezeProfile::two_stage(cfg), *target_mm,
        seed, cfg);
    write_file(out_base.string() + "-episode.json", pipeline::episode_report_json(ep));
  }
  std::printf("wrote %s{.json,-flow.csv,-stacking.csv%s}\n", out_base.string().c_str(),
              target_mm ? ",-episode.json" : "");
}

}  // namespace squeeze::cli
