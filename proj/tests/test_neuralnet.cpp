#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "squeeze/neuralnet.hpp"
#include "squeeze/rng.hpp"

using namespace squeeze;

namespace {

nn::MlpModel random_model(std::vector<int> dims, std::uint64_t seed) {
  Rng rng(seed);
  nn::MlpModel m;
  m.dims = std::move(dims);
  const std::size_t layers = m.dims.size() - 1;
  m.weights.resize(layers);
  m.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    m.weights[l].resize(static_cast<std::size_t>(m.dims[l + 1]) * m.dims[l]);
    m.biases[l].resize(static_cast<std::size_t>(m.dims[l + 1]));
    for (double& w : m.weights[l]) w = rng.uniform(-0.8, 0.8);
    for (double& b : m.biases[l]) b = rng.uniform(-0.3, 0.3);
  }
  m.input_norm.mean.assign(m.dims.front(), 0.0);
  m.input_norm.scale.assign(m.dims.front(), 1.0);
  m.output_norm.mean.assign(m.dims.back(), 0.0);
  m.output_norm.scale.assign(m.dims.back(), 1.0);
  for (std::size_t i = 0; i < m.input_norm.mean.size(); ++i) {
    m.input_norm.mean[i] = rng.uniform(-1, 1);
    m.input_norm.scale[i] = 0.5 + rng.uniform01();
  }
  for (std::size_t i = 0; i < m.output_norm.mean.size(); ++i) {
    m.output_norm.mean[i] = rng.uniform(-1, 1);
    m.output_norm.scale[i] = 0.5 + rng.uniform01();
  }
  return m;
}

// max relative gradient error against central finite differences
double gradient_check(nn::MlpModel& m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(m.in_dim()), y(m.out_dim());
  for (double& v : x) v = rng.uniform(-1.5, 1.5);
  for (double& v : y) v = rng.uniform(-1.5, 1.5);
  const auto grads = nn::backward(m, x, y);

  const double eps = 1e-5;
  double worst = 0.0;
  auto check_param = [&](double& theta, double analytic) {
    const double saved = theta;
    theta = saved + eps;
    const double lp = nn::sample_loss(m, x, y);
    theta = saved - eps;
    const double lm = nn::sample_loss(m, x, y);
    theta = saved;
    const double numeric = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  };
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (std::size_t i = 0; i < m.weights[l].size(); ++i)
      check_param(m.weights[l][i], grads.weights[l][i]);
    for (std::size_t i = 0; i < m.biases[l].size(); ++i)
      check_param(m.biases[l][i], grads.biases[l][i]);
  }
  return worst;
}

std::vector<nn::Sample> toy_regression(int n, std::uint64_t seed) {
  // two inputs, three outputs, mildly nonlinear
  Rng rng(seed);
  std::vector<nn::Sample> samples;
  for (int i = 0; i < n; ++i) {
    nn::Sample s;
    s.group = "g" + std::to_string(i % 5);
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    s.x = {a, b};
    s.y = {a + b, a * b, std::abs(a) - 0.5 * b};
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace

TEST_CASE("normalization") {
  SUBCASE("roundtrip within 1e-10") {
    Rng rng(3);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 40; ++i) {
      rows.push_back({rng.uniform(-5, 5), rng.uniform(100, 1000), rng.uniform(0, 1e-3)});
    }
    const auto norm = nn::Normalization::fit(rows);
    for (const auto& r : rows) {
      const auto back = norm.invert(norm.apply(r));
      for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(std::abs(back[i] - r[i]) < 1e-10 * std::max(1.0, std::abs(r[i])));
    }
  }
  SUBCASE("zero-variance dimensions are flagged, not fatal") {
    std::vector<std::vector<double>> rows{{1.0, 7.0}, {2.0, 7.0}, {3.0, 7.0}};
    const auto norm = nn::Normalization::fit(rows);
    REQUIRE(norm.flagged_dims.size() == 1);
    CHECK(norm.flagged_dims[0] == 1);
    CHECK(norm.scale[1] == 1.0);
  }
}

TEST_CASE("forward") {
  SUBCASE("zero weights and biases return the stored output mean") {
    auto m = random_model({4, 6, 3}, 11);
    for (auto& w : m.weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : m.biases) std::fill(b.begin(), b.end(), 0.0);
    const auto y = m.forward(std::vector<double>{0.3, -0.7, 1.0, 0.0});
    for (int j = 0; j < 3; ++j) CHECK(y[j] == m.output_norm.mean[j]);
  }
  SUBCASE("batch rows match single-sample forwards bitwise") {
    const auto m = random_model({3, 8, 4, 2}, 12);
    std::vector<std::vector<double>> xs{{0.1, 0.2, 0.3}, {-1, 0.5, 2}, {0, 0, 0}};
    const auto batch = m.forward_batch(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(batch[i] == m.forward(xs[i]));
  }
  SUBCASE("dimension mismatch is rejected") {
    const auto m = random_model({3, 4, 2}, 13);
    CHECK_THROWS_AS(m.forward(std::vector<double>{1.0, 2.0}), std::invalid_argument);
  }
  SUBCASE("input perturbation is bounded by the layer norm product") {
    const auto m = random_model({3, 8, 4, 2}, 14);
    double lipschitz = 1.0;
    for (const auto& w : m.weights) {
      double frob = 0.0;
      for (double v : w) frob += v * v;
      lipschitz *= std::sqrt(frob);  // spectral norm upper bound
    }
    double in_scale = 0.0, out_scale = 0.0;
    for (double s : m.input_norm.scale) in_scale = std::max(in_scale, 1.0 / s);
    for (double s : m.output_norm.scale) out_scale = std::max(out_scale, s);
    lipschitz *= in_scale * out_scale;

    Rng rng(15);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      auto x2 = x;
      const double delta = 1e-3;
      x2[rng.bounded(3)] += delta;
      const auto y1 = m.forward(x), y2 = m.forward(x2);
      double dy = 0.0;
      for (std::size_t j = 0; j < y1.size(); ++j) dy += (y2[j] - y1[j]) * (y2[j] - y1[j]);
      CHECK(std::sqrt(dy) <= lipschitz * delta * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("backward") {
  SUBCASE("zero residual gives zero gradients") {
    auto m = random_model({3, 5, 2}, 21);
    // identity output norms so forward(x) round-trips to an exactly zero residual
    std::fill(m.output_norm.mean.begin(), m.output_norm.mean.end(), 0.0);
    std::fill(m.output_norm.scale.begin(), m.output_norm.scale.end(), 1.0);
    const std::vector<double> x{0.4, -0.2, 0.9};
    const auto y = m.forward(x);
    const auto g = nn::backward(m, x, y);
    for (const auto& w : g.weights)
      for (double v : w) CHECK(v == 0.0);
    for (const auto& b : g.biases)
      for (double v : b) CHECK(v == 0.0);
  }
  SUBCASE("output-layer bias gradient is the residual sign over out_dim") {
    auto m = random_model({2, 4, 3}, 22);
    const std::vector<double> x{0.3, 0.1};
    auto y = m.forward(x);
    y[0] -= 1.0;  // prediction above target
    y[1] += 1.0;  // below
    const auto g = nn::backward(m, x, y);
    CHECK(g.biases.back()[0] == doctest::Approx(1.0 / 3.0));
    CHECK(g.biases.back()[1] == doctest::Approx(-1.0 / 3.0));
  }
  SUBCASE("matches central finite differences on random nets") {
    Rng dims_rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> dims{2 + static_cast<int>(dims_rng.bounded(4)),
                            3 + static_cast<int>(dims_rng.bounded(5)),
                            2 + static_cast<int>(dims_rng.bounded(4)),
                            1 + static_cast<int>(dims_rng.bounded(3))};
      auto m = random_model(dims, 100 + trial);
      CHECK(gradient_check(m, 200 + trial) < 1e-4);
    }
  }
}

TEST_CASE("learning-rate schedule is exact") {
  nn::TrainConfig tc;
  for (int e = 0; e < 500; ++e) {
    const double expected = 0.005 * std::pow(0.9, e / 15);
    CHECK(nn::lr_at_epoch(tc, e) == expected);
  }
}

TEST_CASE("train") {
  nn::TrainConfig tc;
  tc.hidden_dims = {16, 8};
  tc.epochs = 60;
  tc.batch_size = 8;
  tc.seed = 5;

  SUBCASE("loss decreases on a toy regression") {
    const auto samples = toy_regression(120, 4);
    const auto r = nn::train(samples, tc);
    CHECK(r.train_loss.back() < r.train_loss.front());
    CHECK(r.held_out_groups.size() == 1);  // 15% of 5 groups
    CHECK_FALSE(std::isnan(r.val_loss.back()));
  }
  SUBCASE("same seed reproduces weights bit for bit") {
    const auto samples = toy_regression(60, 4);
    const auto a = nn::train(samples, tc);
    const auto b = nn::train(samples, tc);
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.model.biases == b.model.biases);
    tc.seed = 6;
    const auto c = nn::train(samples, tc);
    CHECK(a.model.weights != c.model.weights);
  }
  SUBCASE("constant input dimension is flagged, not fatal") {
    auto samples = toy_regression(40, 7);
    for (auto& s : samples) s.x.push_back(3.14);
    const auto r = nn::train(samples, tc);
    REQUIRE(r.model.input_norm.flagged_dims.size() == 1);
    CHECK(r.model.input_norm.flagged_dims[0] == 2);
  }
  SUBCASE("too few samples are rejected") {
    CHECK_THROWS_AS(nn::train(toy_regression(1, 7), tc), std::invalid_argument);
  }
}

TEST_CASE("model files round-trip bit for bit") {
  nn::TrainConfig tc;
  tc.hidden_dims = {12, 6};
  tc.epochs = 30;
  tc.seed = 9;
  const auto samples = toy_regression(50, 8);
  auto r = nn::train(samples, tc);
  r.model.which = "custom";

  const auto dir = std::filesystem::temp_directory_path() / "squeeze_nn_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "model.json";
  nn::save_model(r.model, file);
  const auto loaded = nn::load_model(file);
  CHECK(loaded.dims == r.model.dims);
  CHECK(loaded.which == "custom");

  Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(loaded.forward(x) == r.model.forward(x));  // bitwise
  }

  SUBCASE("unknown format versions are rejected") {
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << "{\"format_version\": 99}\n";
    CHECK_THROWS_AS(nn::load_model(bad), std::runtime_error);
  }
}
