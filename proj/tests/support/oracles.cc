#include "support/oracles.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "llmguard/rng.h"

namespace llmguard::testing {

namespace {

struct LongParams {
  std::vector<std::vector<long double>> weights;
  std::vector<std::vector<long double>> biases;
};

LongParams widen(const MlpModel& model) {
  LongParams p;
  for (const auto& layer : model.layers()) {
    p.weights.emplace_back(layer.weights.begin(), layer.weights.end());
    p.biases.emplace_back(layer.bias.begin(), layer.bias.end());
  }
  return p;
}

// Smallest |pre-activation| over every hidden unit.
double min_hidden_margin(const MlpModel& model, const std::vector<double>& x) {
  std::vector<double> a = x;
  double margin = INFINITY;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    std::vector<double> z(layers[l].out);
    for (std::size_t r = 0; r < layers[l].out; ++r) {
      double sum = layers[l].bias[r];
      for (std::size_t c = 0; c < layers[l].in; ++c) sum += layers[l].weight(r, c) * a[c];
      margin = std::min(margin, std::fabs(sum));
      z[r] = std::max(0.0, sum);
    }
    a = std::move(z);
  }
  return margin;
}

}  // namespace

long double oracle_loss(const std::vector<std::vector<long double>>& weights,
                        const std::vector<std::vector<long double>>& biases,
                        const MlpModel& shape, const std::vector<double>& x,
                        const std::vector<double>& targets) {
  std::vector<long double> a(x.begin(), x.end());
  const auto& layers = shape.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t in = layers[l].in;
    std::vector<long double> z(layers[l].out);
    for (std::size_t r = 0; r < layers[l].out; ++r) {
      long double sum = biases[l][r];
      for (std::size_t c = 0; c < in; ++c) sum += weights[l][r * in + c] * a[c];
      const bool last = l + 1 == layers.size();
      z[r] = last ? 1.0L / (1.0L + std::exp(-sum)) : std::max(0.0L, sum);
    }
    a = std::move(z);
  }
  long double loss = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const long double p = std::clamp<long double>(a[k], 1e-12L, 1.0L - 1e-12L);
    loss -= targets[k] * std::log(p) + (1.0L - targets[k]) * std::log(1.0L - p);
  }
  return loss / static_cast<long double>(a.size());
}

GradientCheck check_gradients(std::uint64_t seed) {
  DeterministicRng rng(seed);
  const std::size_t in = 1 + rng.below(6);
  const std::size_t depth = rng.below(3);
  std::vector<std::size_t> hidden;
  for (std::size_t i = 0; i < depth; ++i) hidden.push_back(1 + rng.below(6));
  const std::size_t out = 1 + rng.below(3);

  MlpModel model = initialize_model(in, hidden, out, rng.next());
  for (auto& layer : model.mutable_layers()) {
    for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  }
  std::vector<double> x(in);
  std::vector<double> targets(out);
  for (auto& t : targets) t = static_cast<double>(rng.below(2));
  do {
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
  } while (min_hidden_margin(model, x) < 1e-3);

  GradientCheck result;
  std::ostringstream desc;
  desc << "seed " << seed << " dims " << in;
  for (auto h : hidden) desc << "-" << h;
  desc << "-" << out;
  result.description = desc.str();

  const Gradients analytic = backward(model, x, targets);
  LongParams p = widen(model);
  const long double h = kFiniteDifferenceStep;
  auto compare = [&](long double& param, double a) {
    const long double saved = param;
    param = saved + h;
    const long double up = oracle_loss(p.weights, p.biases, model, x, targets);
    param = saved - h;
    const long double down = oracle_loss(p.weights, p.biases, model, x, targets);
    param = saved;
    const double numeric = static_cast<double>((up - down) / (2.0L * h));
    const double abs_err = std::fabs(a - numeric);
    const double denom = std::max({std::fabs(a), std::fabs(numeric), kRelativeErrorFloor});
    result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
    result.max_relative_error = std::max(result.max_relative_error, abs_err / denom);
    ++result.parameters;
  };
  for (std::size_t l = 0; l < analytic.size(); ++l) {
    for (std::size_t i = 0; i < analytic[l].weights.size(); ++i) {
      compare(p.weights[l][i], analytic[l].weights[i]);
    }
    for (std::size_t i = 0; i < analytic[l].bias.size(); ++i) {
      compare(p.biases[l][i], analytic[l].bias[i]);
    }
  }
  return result;
}

bool any_flagged(const std::vector<DetectorReport>& reports) {
  bool any = false;
  for (const auto& r : reports) any = any || r.flagged;
  return any;
}

bool brute_force_separable(const std::vector<std::vector<double>>& features,
                           const std::vector<int>& labels, int range) {
  for (int w0 = -range; w0 <= range; ++w0) {
    for (int w1 = -range; w1 <= range; ++w1) {
      for (int b = -range; b <= range; ++b) {
        bool ok = true;
        for (std::size_t i = 0; i < features.size() && ok; ++i) {
          const double s = w0 * features[i][0] + w1 * features[i][1] + b;
          ok = labels[i] == 1 ? s > 0 : s < 0;
        }
        if (ok) return true;
      }
    }
  }
  return false;
}

double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double pairs = 0.0;
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return pairs == 0.0 ? -1.0 : wins / pairs;
}

}  // namespace llmguard::testing
