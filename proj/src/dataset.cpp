#include <algorithm>
#include "squeeze/dataset.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "squeeze/haptics.hpp"
#include "squeeze/rng.hpp"

namespace squeeze::dataset {

namespace {
constexpr std::uint64_t kRowStream = 0x524F5753ull;

std::string index_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%02d", prefix, i);
  return buf;
}
}  // namespace

ExperimentGrid ExperimentGrid::from_config(const Config& cfg) {
  ExperimentGrid grid;
  const int n = cfg.grid_train_liquids;
  const double span = std::log10(cfg.grid_mu_max_cp / cfg.grid_mu_min_cp);
  std::vector<double> mus(n);
  for (int i = 0; i < n; ++i) {
    mus[i] = std::min(cfg.grid_mu_max_cp,
                      cfg.grid_mu_min_cp * std::pow(10.0, span * i / (n - 1)));
    grid.training.push_back({mus[i],
                             cfg.grid_densities[i % cfg.grid_densities.size()],
                             index_name("train", i)});
  }
  for (std::size_t k = 0; k < cfg.grid_test_pair_indices.size(); ++k) {
    const int i = cfg.grid_test_pair_indices[k];
    const double mu = std::sqrt(mus[i] * mus[i + 1]);
    grid.testing.push_back({mu,
                            cfg.grid_densities[(k + 3) % cfg.grid_densities.size()],
                            index_name("test", static_cast<int>(k))});
  }
  grid.fills_ml.resize(cfg.grid_fill_count);
  for (int j = 0; j < cfg.grid_fill_count; ++j)
    grid.fills_ml[j] = cfg.grid_fill_min_ml + (cfg.grid_fill_max_ml - cfg.grid_fill_min_ml) *
                                                  j / (cfg.grid_fill_count - 1);
  return grid;
}

const sim::LiquidSpec* ExperimentGrid::find(const std::string& name) const {
  for (const auto& l : training)
    if (l.name == name) return &l;
  for (const auto& l : testing)
    if (l.name == name) return &l;
  return nullptr;
}

Dataset generate(const Config& cfg, std::int64_t seed) {
  if (seed < 0) throw std::invalid_argument("generate: seed must be non-negative");
  const auto grid = ExperimentGrid::from_config(cfg);
  const auto profile = sim::SqueezeProfile::two_stage(cfg);

  Dataset ds;
  ds.rows.reserve(grid.training.size() * grid.fills_ml.size());
  for (std::size_t li = 0; li < grid.training.size(); ++li) {
    const auto& liquid = grid.training[li];
    for (std::size_t fi = 0; fi < grid.fills_ml.size(); ++fi) {
      Row row;
      row.liquid = liquid.name;
      row.viscosity_cp = liquid.viscosity_cp;
      row.density_g_per_ml = liquid.density_g_per_ml;
      row.fill_ml = grid.fills_ml[fi];
      row.row_seed = seed_mix({static_cast<std::uint64_t>(seed), kRowStream,
                               static_cast<std::uint64_t>(li), static_cast<std::uint64_t>(fi)});

      const auto explore_seed =
          static_cast<std::int64_t>(seed_mix({row.row_seed, 0xE1ull}) >> 1);
      const auto dispense_seed =
          static_cast<std::int64_t>(seed_mix({row.row_seed, 0xD1ull}) >> 1);

      sim::BottleState bottle{cfg.capacity_ml, row.fill_ml, cfg.bottle_tare_g};
      const auto trace = sim::simulate_exploration(liquid, bottle, explore_seed, cfg);
      const double weight = cfg.bottle_tare_g + row.fill_ml * liquid.density_g_per_ml;
      row.feature = haptics::extract_feature(trace, weight, cfg).as_vector();

      const auto log = sim::simulate_dispense(liquid, bottle, profile, dispense_seed, cfg);
      const auto flow_curve =
          curves::flow_from_weights(log.scale_time_s, log.scale_weight_g,
                                    liquid.density_g_per_ml, cfg);
      // drop the (0,0) anchor: models predict the 17 free knots
      row.flow_label.assign(flow_curve.knot_y().begin() + 1, flow_curve.knot_y().end());

      if (liquid.viscosity_cp >= cfg.stacking_min_viscosity_cp)
        row.stacking_label = sim::true_stacking_curve(liquid, cfg).knot_y();

      ds.rows.push_back(std::move(row));
    }
  }
  return ds;
}

void save_jsonl(const Dataset& ds, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("save_jsonl: cannot write " + file.string());
  nlohmann::json header;
  header["format_version"] = 1;
  header["kind"] = "dataset";
  header["rows"] = ds.rows.size();
  out << header.dump() << "\n";
  for (const auto& r : ds.rows) {
    nlohmann::json j;
    j["liquid"] = r.liquid;
    j["viscosity_cp"] = r.viscosity_cp;
    j["density_g_per_ml"] = r.density_g_per_ml;
    j["fill_ml"] = r.fill_ml;
    j["feature"] = r.feature;
    j["flow_label"] = r.flow_label;
    if (r.stacking_label)
      j["stacking_label"] = *r.stacking_label;
    else
      j["stacking_label"] = nullptr;
    j["row_seed"] = r.row_seed;
    out << j.dump() << "\n";
  }
}

Dataset load_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_jsonl: cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_jsonl: empty file " + file.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_jsonl: bad header: " + std::string(e.what()));
  }
  if (!header.contains("format_version") || header.at("format_version").get<int>() != 1 ||
      header.value("kind", std::string{}) != "dataset")
    throw std::runtime_error("load_jsonl: unsupported dataset format in " + file.string());

  Dataset ds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("load_jsonl: bad row: " + std::string(e.what()));
    }
    Row r;
    r.liquid = j.at("liquid").get<std::string>();
    r.viscosity_cp = j.at("viscosity_cp").get<double>();
    r.density_g_per_ml = j.at("density_g_per_ml").get<double>();
    r.fill_ml = j.at("fill_ml").get<double>();
    r.feature = j.at("feature").get<std::vector<double>>();
    r.flow_label = j.at("flow_label").get<std::vector<double>>();
    if (!j.at("stacking_label").is_null())
      r.stacking_label = j.at("stacking_label").get<std::vector<double>>();
    r.row_seed = j.at("row_seed").get<std::uint64_t>();
    ds.rows.push_back(std::move(r));
  }
  if (ds.rows.size() != header.at("rows").get<std::size_t>())
    throw std::runtime_error("load_jsonl: row count mismatch in " + file.string());
  return ds;
}

}  // namespace squeeze::dataset
