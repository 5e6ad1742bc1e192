#include "squeeze/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "squeeze/rng.hpp"

namespace squeeze::nn {

namespace {

constexpr std::uint64_t kInitStream = 0x494E4954ull;
constexpr std::uint64_t kSplitStream = 0x53504C54ull;
constexpr std::uint64_t kShuffleStream = 0x53485546ull;

void affine(const std::vector<double>& w, const std::vector<double>& b, int out_dim,
            int in_dim, const std::vector<double>& x, std::vector<double>& z) {
  z.assign(static_cast<std::size_t>(out_dim), 0.0);
  for (int r = 0; r < out_dim; ++r) {
    const double* row = w.data() + static_cast<std::size_t>(r) * in_dim;
    double acc = b[static_cast<std::size_t>(r)];
    for (int c = 0; c < in_dim; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
    z[static_cast<std::size_t>(r)] = acc;
  }
}

// Forward pass keeping every layer activation (normalized space).
void forward_layers(const MlpModel& m, std::span<const double> x,
                    std::vector<std::vector<double>>& acts) {
  const std::size_t layers = m.weights.size();
  acts.resize(layers + 1);
  acts[0] = m.input_norm.apply(x);
  for (std::size_t l = 0; l < layers; ++l) {
    affine(m.weights[l], m.biases[l], m.dims[l + 1], m.dims[l], acts[l], acts[l + 1]);
    if (l + 1 < layers)
      for (double& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;
  }
}

}  // namespace

std::vector<double> Normalization::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("normalization: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / scale[i];
  return out;
}

std::vector<double> Normalization::invert(std::span<const double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("normalization: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * scale[i] + mean[i];
  return out;
}

Normalization Normalization::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("normalization: no rows");
  const std::size_t d = rows[0].size();
  Normalization n;
  n.mean.assign(d, 0.0);
  n.scale.assign(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw std::invalid_argument("normalization: ragged rows");
    for (std::size_t i = 0; i < d; ++i) n.mean[i] += r[i];
  }
  for (double& v : n.mean) v /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i) {
      const double c = r[i] - n.mean[i];
      n.scale[i] += c * c;
    }
  for (std::size_t i = 0; i < d; ++i) {
    n.scale[i] = std::sqrt(n.scale[i] / static_cast<double>(rows.size()));
    if (!(n.scale[i] > 1e-12)) {
      n.scale[i] = 1.0;
      n.flagged_dims.push_back(static_cast<int>(i));
    }
  }
  return n;
}

std::vector<double> MlpModel::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  std::vector<std::vector<double>> acts;
  forward_layers(*this, x, acts);
  return output_norm.invert(acts.back());
}

std::vector<std::vector<double>> MlpModel::forward_batch(
    const std::vector<std::vector<double>>& xs) const {
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(forward(x));
  return out;
}

Gradients Gradients::zeros_like(const MlpModel& m) {
  Gradients g;
  g.weights.resize(m.weights.size());
  g.biases.resize(m.biases.size());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    g.weights[l].assign(m.weights[l].size(), 0.0);
    g.biases[l].assign(m.biases[l].size(), 0.0);
  }
  return g;
}

void Gradients::accumulate(const Gradients& g) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += g.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += g.biases[l][i];
  }
}

void Gradients::scale(double s) {
  for (auto& w : weights)
    for (double& v : w) v *= s;
  for (auto& b : biases)
    for (double& v : b) v *= s;
}

double sample_loss(const MlpModel& m, std::span<const double> x, std::span<const double> y) {
  if (static_cast<int>(y.size()) != m.out_dim())
    throw std::invalid_argument("sample_loss: output dimension mismatch");
  std::vector<std::vector<double>> acts;
  forward_layers(m, x, acts);
  const auto yn = m.output_norm.apply(y);
  double loss = 0.0;
  for (std::size_t i = 0; i < yn.size(); ++i) loss += std::abs(acts.back()[i] - yn[i]);
  return loss / static_cast<double>(yn.size());
}

Gradients backward(const MlpModel& m, std::span<const double> x, std::span<const double> y) {
  if (static_cast<int>(x.size()) != m.in_dim() || static_cast<int>(y.size()) != m.out_dim())
    throw std::invalid_argument("backward: dimension mismatch");

  std::vector<std::vector<double>> acts;
  forward_layers(m, x, acts);
  const auto yn = m.output_norm.apply(y);

  Gradients g = Gradients::zeros_like(m);
  const std::size_t layers = m.weights.size();

  // dL/dyhat for L = mean_j |yhat_j - yn_j|; subgradient 0 at zero residual
  std::vector<double> delta(yn.size());
  for (std::size_t j = 0; j < yn.size(); ++j) {
    const double r = acts.back()[j] - yn[j];
    delta[j] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / static_cast<double>(yn.size());
  }

  for (std::size_t l = layers; l-- > 0;) {
    const int out_d = m.dims[l + 1];
    const int in_d = m.dims[l];
    const auto& a_in = acts[l];
    for (int r = 0; r < out_d; ++r) {
      const double dr = delta[static_cast<std::size_t>(r)];
      g.biases[l][static_cast<std::size_t>(r)] += dr;
      double* grow = g.weights[l].data() + static_cast<std::size_t>(r) * in_d;
      for (int c = 0; c < in_d; ++c) grow[c] += dr * a_in[static_cast<std::size_t>(c)];
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<std::size_t>(in_d), 0.0);
    for (int r = 0; r < out_d; ++r) {
      const double dr = delta[static_cast<std::size_t>(r)];
      const double* wrow = m.weights[l].data() + static_cast<std::size_t>(r) * in_d;
      for (int c = 0; c < in_d; ++c) prev[static_cast<std::size_t>(c)] += dr * wrow[c];
    }
    // rectifier derivative: 1 where the activation is positive, else 0
    for (int c = 0; c < in_d; ++c)
      if (!(a_in[static_cast<std::size_t>(c)] > 0.0)) prev[static_cast<std::size_t>(c)] = 0.0;
    delta = std::move(prev);
  }
  return g;
}

TrainConfig TrainConfig::from(const Config& cfg, std::int64_t seed) {
  TrainConfig tc;
  tc.hidden_dims = cfg.nn_hidden_dims;
  tc.epochs = cfg.nn_epochs;
  tc.batch_size = cfg.nn_batch_size;
  tc.lr0 = cfg.nn_lr0;
  tc.lr_decay = cfg.nn_lr_decay;
  tc.lr_decay_every = cfg.nn_lr_decay_every;
  tc.adam_beta1 = cfg.nn_adam_beta1;
  tc.adam_beta2 = cfg.nn_adam_beta2;
  tc.adam_eps = cfg.nn_adam_eps;
  tc.val_fraction = cfg.nn_val_fraction;
  tc.seed = seed;
  return tc;
}

double lr_at_epoch(const TrainConfig& tc, int epoch) {
  return tc.lr0 * std::pow(tc.lr_decay, epoch / tc.lr_decay_every);
}

TrainResult train(const std::vector<Sample>& samples, const TrainConfig& tc) {
  if (samples.size() < 2) throw std::invalid_argument("train: need at least 2 samples");
  if (tc.seed < 0) throw std::invalid_argument("train: seed must be non-negative");
  const std::size_t in_d = samples[0].x.size();
  const std::size_t out_d = samples[0].y.size();
  for (const auto& s : samples)
    if (s.x.size() != in_d || s.y.size() != out_d)
      throw std::invalid_argument("train: inconsistent sample dimensions");

  const std::uint64_t seed = static_cast<std::uint64_t>(tc.seed);

  // Hold out a fraction of the groups (liquids), never individual rows.
  std::vector<std::string> groups;
  {
    std::set<std::string> seen;
    for (const auto& s : samples)
      if (seen.insert(s.group).second) groups.push_back(s.group);
  }
  std::vector<std::string> held_out;
  if (tc.val_fraction > 0 && groups.size() > 1) {
    const std::size_t n_hold = std::min<std::size_t>(
        groups.size() - 1,
        static_cast<std::size_t>(std::lround(tc.val_fraction * static_cast<double>(groups.size()))));
    std::vector<std::string> shuffled = groups;
    Rng rs(seed_mix({seed, kSplitStream}));
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rs.bounded(i)]);
    held_out.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(n_hold));
  }
  std::set<std::string> held_set(held_out.begin(), held_out.end());

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    (held_set.count(samples[i].group) ? val_idx : train_idx).push_back(i);
  if (train_idx.empty()) throw std::invalid_argument("train: empty training split");

  MlpModel m;
  m.dims.push_back(static_cast<int>(in_d));
  for (int h : tc.hidden_dims) m.dims.push_back(h);
  m.dims.push_back(static_cast<int>(out_d));
  m.train_seed = tc.seed;

  {
    std::vector<std::vector<double>> xs, ys;
    xs.reserve(train_idx.size());
    ys.reserve(train_idx.size());
    for (std::size_t i : train_idx) {
      xs.push_back(samples[i].x);
      ys.push_back(samples[i].y);
    }
    m.input_norm = Normalization::fit(xs);
    m.output_norm = Normalization::fit(ys);
  }

  // He-style uniform fan-in init
  Rng ri(seed_mix({seed, kInitStream}));
  const std::size_t layers = m.dims.size() - 1;
  m.weights.resize(layers);
  m.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = m.dims[l];
    const double limit = std::sqrt(6.0 / fan_in);
    m.weights[l].resize(static_cast<std::size_t>(m.dims[l + 1]) * fan_in);
    for (double& w : m.weights[l]) w = ri.uniform(-limit, limit);
    m.biases[l].assign(static_cast<std::size_t>(m.dims[l + 1]), 0.0);
  }

  Gradients adam_m = Gradients::zeros_like(m);
  Gradients adam_v = Gradients::zeros_like(m);
  std::int64_t step = 0;

  TrainResult result;
  result.held_out_groups = held_out;
  result.train_loss.reserve(static_cast<std::size_t>(tc.epochs));
  result.val_loss.reserve(static_cast<std::size_t>(tc.epochs));

  std::vector<std::size_t> order = train_idx;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng rsh(seed_mix({seed, kShuffleStream, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rsh.bounded(i)]);

    const double lr = lr_at_epoch(tc, epoch);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      Gradients batch = Gradients::zeros_like(m);
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = samples[order[i]];
        epoch_loss += sample_loss(m, s.x, s.y);
        batch.accumulate(backward(m, s.x, s.y));
      }
      batch.scale(1.0 / static_cast<double>(end - start));

      ++step;
      const double bc1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < layers; ++l) {
        auto update = [&](std::vector<double>& theta, std::vector<double>& mm,
                          std::vector<double>& vv, const std::vector<double>& gg) {
          for (std::size_t i = 0; i < theta.size(); ++i) {
            mm[i] = tc.adam_beta1 * mm[i] + (1.0 - tc.adam_beta1) * gg[i];
            vv[i] = tc.adam_beta2 * vv[i] + (1.0 - tc.adam_beta2) * gg[i] * gg[i];
            const double mhat = mm[i] / bc1;
            const double vhat = vv[i] / bc2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + tc.adam_eps);
          }
        };
        update(m.weights[l], adam_m.weights[l], adam_v.weights[l], batch.weights[l]);
        update(m.biases[l], adam_m.biases[l], adam_v.biases[l], batch.biases[l]);
      }
    }

    result.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    if (!val_idx.empty()) {
      double vl = 0.0;
      for (std::size_t i : val_idx) vl += sample_loss(m, samples[i].x, samples[i].y);
      result.val_loss.push_back(vl / static_cast<double>(val_idx.size()));
    } else {
      result.val_loss.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }

  result.model = std::move(m);
  return result;
}

void save_model(const MlpModel& m, const std::filesystem::path& file) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "mlp-model";
  j["which"] = m.which;
  j["dims"] = m.dims;
  j["weights"] = m.weights;
  j["biases"] = m.biases;
  j["input_mean"] = m.input_norm.mean;
  j["input_scale"] = m.input_norm.scale;
  j["input_flagged_dims"] = m.input_norm.flagged_dims;
  j["output_mean"] = m.output_norm.mean;
  j["output_scale"] = m.output_norm.scale;
  j["output_flagged_dims"] = m.output_norm.flagged_dims;
  j["train_seed"] = m.train_seed;
  j["held_out_groups"] = m.held_out_groups;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot write " + file.string());
  out << j.dump(2) << "\n";
}

MlpModel load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_model: cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_model: invalid JSON in " + file.string() + ": " + e.what());
  }
  if (!j.contains("format_version") || j.at("format_version").get<int>() != 1)
    throw std::runtime_error("load_model: unsupported format version in " + file.string());
  MlpModel m;
  m.which = j.value("which", std::string{});
  m.dims = j.at("dims").get<std::vector<int>>();
  m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  m.input_norm.mean = j.at("input_mean").get<std::vector<double>>();
  m.input_norm.scale = j.at("input_scale").get<std::vector<double>>();
  m.input_norm.flagged_dims = j.value("input_flagged_dims", std::vector<int>{});
  m.output_norm.mean = j.at("output_mean").get<std::vector<double>>();
  m.output_norm.scale = j.at("output_scale").get<std::vector<double>>();
  m.output_norm.flagged_dims = j.value("output_flagged_dims", std::vector<int>{});
  m.train_seed = j.value("train_seed", std::int64_t{0});
  m.held_out_groups = j.value("held_out_groups", std::vector<std::string>{});
  if (m.dims.size() < 2 || m.weights.size() != m.dims.size() - 1 ||
      m.biases.size() != m.dims.size() - 1)
    throw std::runtime_error("load_model: inconsistent layer shapes in " + file.string());
  for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
    if (m.weights[l].size() !=
            static_cast<std::size_t>(m.dims[l + 1]) * static_cast<std::size_t>(m.dims[l]) ||
        m.biases[l].size() != static_cast<std::size_t>(m.dims[l + 1]))
      throw std::runtime_error("load_model: inconsistent layer shapes in " + file.string());
  }
  for (double s : m.input_norm.scale)
    if (!(s > 0)) throw std::runtime_error("load_model: non-positive normalization scale");
  for (double s : m.output_norm.scale)
    if (!(s > 0)) throw std::runtime_error("load_model: non-positive normalization scale");
  return m;
}

void save_loss_csv(const TrainResult& r, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("save_loss_csv: cannot write " + file.string());
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
    out << e << "," << r.train_loss[e] << ",";
    if (std::isnan(r.val_loss[e]))
      out << "";
    else
      out << r.val_loss[e];
    out << "\n";
  }
}

}  // namespace squeeze::nn
