#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "squeeze/config.hpp"

namespace squeeze::nn {

// Per-dimension z-score parameters. Dimensions with zero variance get scale 1
// and are flagged rather than rejected.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<int> flagged_dims;

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> invert(std::span<const double> x) const;
  static Normalization fit(const std::vector<std::vector<double>>& rows);
};

// Plain fully connected regression net: affine layers, rectifier on hidden
// layers, identity output, z-scored inputs and outputs.
struct MlpModel {
  std::vector<int> dims;  // {in, hidden..., out}
  std::vector<std::vector<double>> weights;  // per layer, row-major [out_dim][in_dim]
  std::vector<std::vector<double>> biases;
  Normalization input_norm, output_norm;
  std::string which;  // flow | stacking | pp-flow | pp-stacking | custom
  std::int64_t train_seed = 0;
  std::vector<std::string> held_out_groups;  // validation liquids, recorded for audits

  int in_dim() const { return dims.front(); }
  int out_dim() const { return dims.back(); }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<std::vector<double>> forward_batch(
      const std::vector<std::vector<double>>& xs) const;
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  static Gradients zeros_like(const MlpModel& m);
  void accumulate(const Gradients& g);
  void scale(double s);
};

// Mean absolute error in normalized output space for one sample.
double sample_loss(const MlpModel& m, std::span<const double> x, std::span<const double> y);

// Exact gradients of sample_loss w.r.t. all weights and biases; subgradient 0
// at the kinks of |.| and of the rectifier.
Gradients backward(const MlpModel& m, std::span<const double> x, std::span<const double> y);

struct TrainConfig {
  std::vector<int> hidden_dims{128, 32};
  int epochs = 500;
  int batch_size = 32;
  double lr0 = 0.005;
  double lr_decay = 0.9;
  int lr_decay_every = 15;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double val_fraction = 0.15;
  std::int64_t seed = 0;

  static TrainConfig from(const Config& cfg, std::int64_t seed);
};

double lr_at_epoch(const TrainConfig& tc, int epoch);  // lr0 * decay^(epoch/every)

struct Sample {
  std::string group;  // liquid id; validation is held out by group
  std::vector<double> x;
  std::vector<double> y;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> train_loss;  // per epoch, normalized-space L1
  std::vector<double> val_loss;    // NaN entries when no validation split
  std::vector<std::string> held_out_groups;
};

// Adam + stepped learning-rate schedule + per-epoch seeded shuffling.
// Deterministic given (samples order, config, seed).
TrainResult train(const std::vector<Sample>& samples, const TrainConfig& tc);

void save_model(const MlpModel& m, const std::filesystem::path& file);
MlpModel load_model(const std::filesystem::path& file);
void save_loss_csv(const TrainResult& r, const std::filesystem::path& file);

}  // namespace squeeze::nn
