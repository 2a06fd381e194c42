#pragma once

// Feed-forward classifier: rectifier hidden layers, elementwise sigmoid
// output heads, mean binary cross-entropy loss, Adam training.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace llmguard {

// Affine map from `in` to `out` units; weights are row-major out x in.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  double& weight(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double weight(std::size_t row, std::size_t col) const { return weights[row * in + col]; }

  bool operator==(const DenseLayer&) const = default;
};

class MlpModel {
 public:
  MlpModel() = default;
  // All parameters zero.
  MlpModel(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
           std::size_t output_dim);
  // Takes ownership of prebuilt layers; throws ShapeError if they do not chain.
  explicit MlpModel(std::vector<DenseLayer> layers);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::vector<std::size_t> hidden_dims() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  bool all_finite() const;

  bool operator==(const MlpModel&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Uniform Glorot initialization in [-a, a], a = sqrt(6 / (fan_in + fan_out));
// biases start at zero.
MlpModel initialize_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                          std::size_t output_dim, std::uint64_t seed);

inline constexpr double kProbabilityClamp = 1e-12;

double sigmoid(double z);

// Head probabilities. Throws ShapeError on dimension mismatch and UsageError
// on non-finite input.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

// Mean over heads of the binary cross-entropy, predictions clamped to
// [1e-12, 1 - 1e-12].
double bce_loss(std::span<const double> predictions, std::span<const double> targets);

// Gradient of bce_loss(forward(model, x), targets) for every parameter, in
// the model's own layer shapes.
using Gradients = std::vector<DenseLayer>;

Gradients backward(const MlpModel& model, std::span<const double> x,
                   std::span<const double> targets);

struct Example {
  std::vector<double> features;
  std::vector<double> targets;
};

// Sum of per-example gradients over `batch`.
Gradients summed_gradient(const MlpModel& model, std::span<const Example> batch);

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::size_t> hidden_dims = {64};

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
};

// Adam over shuffled mini-batches. Initialization and batch order are fully
// determined by config.seed. Throws UsageError on an empty or ragged dataset
// and TrainingDivergedError when the loss or parameters stop being finite.
TrainResult train(std::span<const Example> dataset, const TrainConfig& config);

}  // namespace llmguard
