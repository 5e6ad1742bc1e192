#include "squeeze/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "squeeze/baselines.hpp"
#include "squeeze/haptics.hpp"
#include "squeeze/pipeline.hpp"
#include "squeeze/rng.hpp"

namespace squeeze::bench {

namespace {

constexpr std::uint64_t kBenchStream = 0x424E4348ull;

std::int64_t row_seed(std::int64_t seed, std::uint64_t method, std::uint64_t li,
                      std::uint64_t fi, std::uint64_t ti) {
  return static_cast<std::int64_t>(
      seed_mix({static_cast<std::uint64_t>(seed), kBenchStream, method, li, fi, ti}) >> 1);
}

nn::MlpModel load_one(const std::filesystem::path& dir, const char* name) {
  const auto file = dir / name;
  if (!std::filesystem::exists(file))
    throw std::runtime_error("missing model file: " + file.string());
  return nn::load_model(file);
}

}  // namespace

ModelSet load_models(const std::filesystem::path& dir, const std::set<std::string>& methods) {
  ModelSet m;
  if (methods.count("ours")) {
    m.flow = load_one(dir, "flow.json");
    m.stacking = load_one(dir, "stacking.json");
  }
  if (methods.count("pp")) {
    m.pp_flow = load_one(dir, "pp-flow.json");
    m.pp_stacking = load_one(dir, "pp-stacking.json");
  }
  return m;
}

Report run_benchmark(const ModelSet& models, const Config& cfg, std::int64_t seed,
                     const std::set<std::string>& methods) {
  if (seed < 0) throw std::invalid_argument("run_benchmark: seed must be non-negative");
  for (const auto& m : methods)
    if (m != "ours" && m != "simple" && m != "pp" && m != "wf")
      throw std::invalid_argument("run_benchmark: unknown method '" + m + "'");

  const auto grid = dataset::ExperimentGrid::from_config(cfg);
  const auto two_stage = sim::SqueezeProfile::two_stage(cfg);
  const auto const_rate = sim::SqueezeProfile::constant_rate(cfg);

  Report report;
  report.seed = seed;
  report.methods.assign(methods.begin(), methods.end());

  struct Acc {
    double fc = 0.0, sc = 0.0;
    int n_fc = 0, n_sc = 0;
  };
  std::map<std::string, Acc> curve_acc;

  // ---- curve prediction errors -----------------------------------------
  for (std::size_t li = 0; li < grid.testing.size(); ++li) {
    const auto& liquid = grid.testing[li];
    for (std::size_t fi = 0; fi < cfg.bench_fills_ml.size(); ++fi) {
      const sim::BottleState bottle{cfg.capacity_ml, cfg.bench_fills_ml[fi], cfg.bottle_tare_g};
      const auto truth_flow = sim::true_flow_rate_curve(liquid, bottle, two_stage, cfg);
      const auto truth_stacking = sim::true_stacking_curve(liquid, cfg);

      auto push = [&](const std::string& method, double fc, std::optional<double> sc) {
        report.curve_rows.push_back({method, liquid.name, bottle.fill_ml, fc, sc});
        auto& a = curve_acc[method];
        a.fc += fc;
        ++a.n_fc;
        if (sc) {
          a.sc += *sc;
          ++a.n_sc;
        }
      };

      if (methods.count("ours")) {
        const auto s = row_seed(seed, 1, li, fi, 0);
        const auto trace = sim::simulate_exploration(liquid, bottle, s, cfg);
        const double weight = bottle.bottle_mass_g + bottle.fill_ml * liquid.density_g_per_ml;
        const auto feature = haptics::extract_feature(trace, weight, cfg);
        const auto pred = pipeline::predict_curves(feature, models.flow, models.stacking, cfg);
        push("ours", curves::curve_error(pred.flow, truth_flow),
             curves::curve_error(pred.stacking, truth_stacking));
      }
      if (methods.count("simple")) {
        const auto truth_cr = sim::true_flow_rate_curve(liquid, bottle, const_rate, cfg);
        const auto pred = baselines::simple_flow_curve(const_rate, cfg);
        push("simple", curves::curve_error(pred, truth_cr), std::nullopt);
      }
      if (methods.count("pp")) {
        const auto x = baselines::pp_feature(liquid, bottle);
        const std::vector<double> xv{x[0], x[1]};
        const auto pred = pipeline::curves_from_outputs(models.pp_flow.forward(xv),
                                                        models.pp_stacking.forward(xv), cfg);
        push("pp", curves::curve_error(pred.flow, truth_flow),
             curves::curve_error(pred.stacking, truth_stacking));
      }
      if (methods.count("wf")) {
        const auto s = row_seed(seed, 4, li, fi, 0);
        const auto est = baselines::wf_flow_estimate(liquid, bottle, s, cfg);
        push("wf", curves::curve_error(est, truth_flow), std::nullopt);
      }
    }
  }
  for (const auto& [method, a] : curve_acc) {
    report.fc_error[method] = a.fc / a.n_fc;
    report.sc_error[method] =
        a.n_sc > 0 ? std::optional<double>(a.sc / a.n_sc) : std::nullopt;
  }

  // ---- thickness control -------------------------------------------------
  struct TAcc {
    ThicknessSummary sum;
    int n = 0;
  };
  std::map<std::string, TAcc> t_acc;

  auto push_thickness = [&](const std::string& method, const sim::LiquidSpec& liquid,
                            double fill, double target, const stroke_eval::StrokeMetrics& m,
                            int clamp_events) {
    report.thickness_rows.push_back({method, liquid.name, fill, target, m.mean_abs_error_mm,
                                     m.std_dev_mm, m.pct_error, m.pct_variance, clamp_events});
    auto& a = t_acc[method];
    a.sum.error_mm += m.mean_abs_error_mm;
    a.sum.std_mm += m.std_dev_mm;
    a.sum.pct_error += m.pct_error;
    a.sum.pct_variance += m.pct_variance;
    ++a.n;
  };

  for (std::size_t li = 0; li < grid.testing.size(); ++li) {
    const auto& liquid = grid.testing[li];
    for (std::size_t fi = 0; fi < cfg.bench_fills_ml.size(); ++fi) {
      const sim::BottleState bottle{cfg.capacity_ml, cfg.bench_fills_ml[fi], cfg.bottle_tare_g};
      const auto truth_stacking = sim::true_stacking_curve(liquid, cfg);
      for (std::size_t ti = 0; ti < cfg.bench_targets_mm.size(); ++ti) {
        const double target = cfg.bench_targets_mm[ti];
        if (methods.count("ours")) {
          const auto ep = pipeline::run_episode(liquid, bottle, models.flow, models.stacking,
                                                target, row_seed(seed, 11, li, fi, ti), cfg);
          push_thickness("ours", liquid, bottle.fill_ml, target, ep.stroke.metrics,
                         static_cast<int>(ep.profile.clamps.size()));
        }
        if (methods.count("simple")) {
          const auto simple = baselines::simple_flow_curve(const_rate, cfg);
          const auto ep = pipeline::run_episode_with_curves(
              liquid, bottle, simple, truth_stacking, const_rate, target,
              row_seed(seed, 12, li, fi, ti), cfg);
          push_thickness("simple", liquid, bottle.fill_ml, target, ep.stroke.metrics,
                         static_cast<int>(ep.profile.clamps.size()));
        }
        if (methods.count("pp")) {
          const auto x = baselines::pp_feature(liquid, bottle);
          const std::vector<double> xv{x[0], x[1]};
          const auto pred = pipeline::curves_from_outputs(models.pp_flow.forward(xv),
                                                          models.pp_stacking.forward(xv), cfg);
          const auto ep = pipeline::run_episode_with_curves(
              liquid, bottle, pred.flow, pred.stacking, two_stage, target,
              row_seed(seed, 13, li, fi, ti), cfg);
          push_thickness("pp", liquid, bottle.fill_ml, target, ep.stroke.metrics,
                         static_cast<int>(ep.profile.clamps.size()));
        }
        if (methods.count("wf")) {
          const auto ep = baselines::run_wf_episode(liquid, bottle, target,
                                                    row_seed(seed, 14, li, fi, ti), cfg);
          push_thickness("wf", liquid, bottle.fill_ml, target, ep.stroke.metrics,
                         static_cast<int>(ep.profile.clamps.size()));
        }
      }
    }
  }
  for (const auto& [method, a] : t_acc) {
    ThicknessSummary s = a.sum;
    s.error_mm /= a.n;
    s.std_mm /= a.n;
    s.pct_error /= a.n;
    s.pct_variance /= a.n;
    report.thickness[method] = s;
  }
  return report;
}

std::string report_to_json(const Report& report) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "benchmark-report";
  j["seed"] = report.seed;
  j["methods"] = report.methods;
  nlohmann::json curve = nlohmann::json::object();
  for (const auto& m : report.methods) {
    nlohmann::json e;
    e["fc_error_ml_s"] = report.fc_error.at(m);
    const auto& sc = report.sc_error.at(m);
    if (sc)
      e["sc_error_ml_cm"] = *sc;
    else
      e["sc_error_ml_cm"] = nullptr;
    curve[m] = e;
  }
  j["curve_errors"] = curve;
  nlohmann::json thick = nlohmann::json::object();
  for (const auto& m : report.methods) {
    const auto& s = report.thickness.at(m);
    thick[m] = {{"error_mm", s.error_mm},
                {"std_mm", s.std_mm},
                {"pct_error", s.pct_error},
                {"pct_variance", s.pct_variance}};
  }
  j["thickness"] = thick;
  nlohmann::json crows = nlohmann::json::array();
  for (const auto& r : report.curve_rows) {
    nlohmann::json e = {{"method", r.method},
                        {"liquid", r.liquid},
                        {"fill_ml", r.fill_ml},
                        {"fc_error_ml_s", r.fc_error_ml_s}};
    if (r.sc_error_ml_cm)
      e["sc_error_ml_cm"] = *r.sc_error_ml_cm;
    else
      e["sc_error_ml_cm"] = nullptr;
    crows.push_back(e);
  }
  j["curve_rows"] = crows;
  nlohmann::json trows = nlohmann::json::array();
  for (const auto& r : report.thickness_rows)
    trows.push_back({{"method", r.method},
                     {"liquid", r.liquid},
                     {"fill_ml", r.fill_ml},
                     {"target_mm", r.target_mm},
                     {"error_mm", r.error_mm},
                     {"std_mm", r.std_mm},
                     {"pct_error", r.pct_error},
                     {"pct_variance", r.pct_variance},
                     {"speed_clamp_events", r.speed_clamp_events}});
  j["thickness_rows"] = trows;
  return j.dump(2) + "\n";
}

std::string render_table(const Report& report) {
  std::ostringstream out;
  char buf[160];

  out << "Curve prediction error (mean over test liquids x fills)\n";
  std::snprintf(buf, sizeof(buf), "  %-8s %14s %16s\n", "method", "FC (ml/s)", "SC (ml/cm)");
  out << buf;
  for (const auto& m : report.methods) {
    const auto& sc = report.sc_error.at(m);
    if (sc)
      std::snprintf(buf, sizeof(buf), "  %-8s %14.4f %16.4f\n", m.c_str(),
                    report.fc_error.at(m), *sc);
    else
      std::snprintf(buf, sizeof(buf), "  %-8s %14.4f %16s\n", m.c_str(),
                    report.fc_error.at(m), "N/A");
    out << buf;
  }

  out << "\nStroke thickness control (mean over test liquids x fills x targets)\n";
  std::snprintf(buf, sizeof(buf), "  %-10s %11s %9s %10s %13s\n", "method", "error (mm)",
                "std (mm)", "pct error", "pct variance");
  out << buf;
  for (const auto& m : report.methods) {
    const auto& s = report.thickness.at(m);
    const std::string label = (m == "simple" || m == "wf") ? m + "+GT" : m;
    std::snprintf(buf, sizeof(buf), "  %-10s %11.3f %9.3f %9.1f%% %12.1f%%\n", label.c_str(),
                  s.error_mm, s.std_mm, s.pct_error, s.pct_variance);
    out << buf;
  }
  return out.str();
}

}  // namespace squeeze::bench
