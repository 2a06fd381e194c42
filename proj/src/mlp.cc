#include "llmguard/mlp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "llmguard/errors.h"
#include "llmguard/rng.h"

namespace llmguard {

namespace {

// z = W a + b, skipping zero entries of `a` (count vectors are sparse and
// rectified activations are often zero).
void affine(const DenseLayer& layer, std::span<const double> a, std::vector<double>& z) {
  z.assign(layer.bias.begin(), layer.bias.end());
  for (std::size_t i = 0; i < layer.in; ++i) {
    const double value = a[i];
    if (value == 0.0) continue;
    for (std::size_t j = 0; j < layer.out; ++j) {
      z[j] += layer.weights[j * layer.in + i] * value;
    }
  }
}

struct Trace {
  // activations[0] is the input; activations[k] is the output of layer k-1
  // (rectified for hidden layers, sigmoid for the last).
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> pre_activations;
};

void check_input(const MlpModel& model, std::span<const double> x) {
  if (model.layers().empty()) throw ShapeError("model has no layers");
  if (x.size() != model.input_dim()) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_dim()));
  }
  for (double value : x) {
    if (!std::isfinite(value)) throw UsageError("input contains a non-finite entry");
  }
}

Trace run_forward(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  const auto& layers = model.layers();
  Trace trace;
  trace.activations.reserve(layers.size() + 1);
  trace.pre_activations.reserve(layers.size());
  trace.activations.emplace_back(x.begin(), x.end());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<double> z;
    affine(layers[k], trace.activations.back(), z);
    std::vector<double> a(z.size());
    const bool last = k + 1 == layers.size();
    for (std::size_t j = 0; j < z.size(); ++j) {
      a[j] = last ? sigmoid(z[j]) : std::max(0.0, z[j]);
    }
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
  }
  return trace;
}

Gradients zero_like(const MlpModel& model) {
  Gradients grads;
  grads.reserve(model.layers().size());
  for (const auto& layer : model.layers()) grads.emplace_back(layer.in, layer.out);
  return grads;
}

void check_targets(const MlpModel& model, std::span<const double> targets) {
  if (targets.size() != model.output_dim()) {
    throw ShapeError("target has length " + std::to_string(targets.size()) +
                     ", model has " + std::to_string(model.output_dim()) + " heads");
  }
}

// Adds the example's gradient into `grads` and returns its loss.
double accumulate_backward(const MlpModel& model, std::span<const double> x,
                           std::span<const double> targets, Gradients& grads) {
  check_targets(model, targets);
  const Trace trace = run_forward(model, x);
  const auto& layers = model.layers();
  const std::size_t heads = model.output_dim();

  // d(loss)/d(logit) for the clamped mean BCE. Where the clamp is active the
  // loss is locally constant in the logit.
  const std::vector<double>& p = trace.activations.back();
  std::vector<double> delta(heads);
  for (std::size_t k = 0; k < heads; ++k) {
    const bool clamped = p[k] < kProbabilityClamp || p[k] > 1.0 - kProbabilityClamp;
    delta[k] = clamped ? 0.0 : (p[k] - targets[k]) / static_cast<double>(heads);
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    DenseLayer& grad = grads[l];
    const std::vector<double>& input = trace.activations[l];
    for (std::size_t j = 0; j < layer.out; ++j) {
      grad.bias[j] += delta[j];
      if (delta[j] == 0.0) continue;
      double* row = &grad.weights[j * layer.in];
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (input[i] != 0.0) row[i] += delta[j] * input[i];
      }
    }
    if (l == 0) break;
    const std::vector<double>& z_prev = trace.pre_activations[l - 1];
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t i = 0; i < layer.in; ++i) {
      if (z_prev[i] <= 0.0) continue;
      double sum = 0.0;
      for (std::size_t j = 0; j < layer.out; ++j) {
        sum += layer.weights[j * layer.in + i] * delta[j];
      }
      prev[i] = sum;
    }
    delta = std::move(prev);
  }
  return bce_loss(p, targets);
}

}  // namespace

MlpModel::MlpModel(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                   std::size_t output_dim) {
  if (input_dim == 0 || output_dim == 0) {
    throw ShapeError("input and output dimensions must be positive");
  }
  std::size_t in = input_dim;
  for (std::size_t width : hidden_dims) {
    if (width == 0) throw ShapeError("hidden layer widths must be positive");
    layers_.emplace_back(in, width);
    in = width;
  }
  layers_.emplace_back(in, output_dim);
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("model needs at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (layer.in == 0 || layer.out == 0 || layer.weights.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out) {
      throw ShapeError("layer " + std::to_string(k) + " has inconsistent shapes");
    }
    if (k > 0 && layers_[k - 1].out != layer.in) {
      throw ShapeError("layer " + std::to_string(k) + " input does not match layer " +
                       std::to_string(k - 1) + " output");
    }
  }
}

std::vector<std::size_t> MlpModel::hidden_dims() const {
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) dims.push_back(layers_[k].out);
  return dims;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.weights.size() + layer.bias.size();
  return count;
}

bool MlpModel::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers_.begin(), layers_.end(), [&](const DenseLayer& layer) {
    return std::all_of(layer.weights.begin(), layer.weights.end(), finite) &&
           std::all_of(layer.bias.begin(), layer.bias.end(), finite);
  });
}

MlpModel initialize_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                          std::size_t output_dim, std::uint64_t seed) {
  MlpModel model(input_dim, hidden_dims, output_dim);
  DeterministicRng rng(seed);
  for (auto& layer : model.mutable_layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
  }
  return model;
}

double sigmoid(double z) {
  // Saturated values are pinned inside (0, 1) so probabilities never reach
  // the endpoints.
  constexpr double kLowest = std::numeric_limits<double>::denorm_min();
  constexpr double kHighest = 1.0 - 0x1.0p-53;
  double value;
  if (z >= 0.0) {
    value = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    value = e / (1.0 + e);
  }
  return std::clamp(value, kLowest, kHighest);
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  return run_forward(model, x).activations.back();
}

double bce_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw ShapeError("bce_loss: predictions and targets differ in length");
  }
  if (predictions.empty()) throw ShapeError("bce_loss: empty input");
  double total = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double p = std::clamp(predictions[k], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = targets[k];
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(predictions.size());
}

Gradients backward(const MlpModel& model, std::span<const double> x,
                   std::span<const double> targets) {
  Gradients grads = zero_like(model);
  accumulate_backward(model, x, targets, grads);
  return grads;
}

Gradients summed_gradient(const MlpModel& model, std::span<const Example> batch) {
  Gradients grads = zero_like(model);
  for (const auto& example : batch) {
    accumulate_backward(model, example.features, example.targets, grads);
  }
  return grads;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw UsageError("adam epsilon must be > 0");
  for (std::size_t width : hidden_dims) {
    if (width == 0) throw UsageError("hidden layer widths must be positive");
  }
}

TrainResult train(std::span<const Example> dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw UsageError("cannot train on an empty dataset");
  const std::size_t input_dim = dataset.front().features.size();
  const std::size_t output_dim = dataset.front().targets.size();
  for (const auto& example : dataset) {
    if (example.features.size() != input_dim || example.targets.size() != output_dim) {
      throw UsageError("dataset examples have inconsistent dimensions");
    }
  }
  if (input_dim == 0 || output_dim == 0) {
    throw UsageError("dataset has zero-length features or targets");
  }

  DeterministicRng rng(config.seed);
  TrainResult result;
  result.model = initialize_model(input_dim, config.hidden_dims, output_dim, rng.next());

  Gradients first_moment = zero_like(result.model);
  Gradients second_moment = zero_like(result.model);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::uint64_t step = 0;
  std::vector<Example> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      Gradients grads = zero_like(result.model);
      for (std::size_t b = begin; b < end; ++b) {
        const Example& example = dataset[order[b]];
        epoch_loss += accumulate_backward(result.model, example.features, example.targets, grads);
      }
      const double scale = 1.0 / static_cast<double>(end - begin);

      ++step;
      const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto& layers = result.model.mutable_layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto update = [&](std::vector<double>& params, std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
          for (std::size_t i = 0; i < params.size(); ++i) {
            const double gi = g[i] * scale;
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gi;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gi * gi;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
          }
        };
        update(layers[l].weights, grads[l].weights, first_moment[l].weights,
               second_moment[l].weights);
        update(layers[l].bias, grads[l].bias, first_moment[l].bias, second_moment[l].bias);
      }
    }
    epoch_loss /= static_cast<double>(dataset.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingDivergedError(epoch, "mean loss is not finite");
    }
    if (!result.model.all_finite()) {
      throw TrainingDivergedError(epoch, "parameters are not finite");
    }
    result.epoch_losses.push_back(epoch_loss);
  }
  result.final_loss = result.epoch_losses.back();
  return result;
}

}  // namespace llmguard
