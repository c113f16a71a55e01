#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "exsel/core.hpp"
#include "exsel/embed.hpp"
#include "exsel/rng.hpp"

namespace exsel {

struct TrainSpec {
  int epochs = 300;
  double learning_rate = 1e-2;
  double weight_decay = 0.0;
  std::uint64_t init_seed = 1;
  bool warm_start = false;

  void validate() const {
    if (epochs <= 0) throw Error("train: epochs must be positive");
    if (learning_rate <= 0.0) throw Error("train: learning rate must be positive");
  }
};

// Score predictor m(h(E); theta): an MLP with ReLU hidden layers and a scalar
// linear output, trained by full-batch gradient descent on the MSE.
class ScoreModel {
 public:
  ScoreModel(int input_dim, std::vector<int> hidden, std::uint64_t init_seed = 1)
      : input_dim_(input_dim), hidden_(std::move(hidden)) {
    if (input_dim <= 0) throw Error("surrogate: input dim must be positive");
    for (int h : hidden_)
      if (h <= 0) throw Error("surrogate: hidden widths must be positive");
    initialize(init_seed);
  }

  void initialize(std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "mlp-init");
    layers_.clear();
    int in = input_dim_;
    std::vector<int> outs(hidden_);
    outs.push_back(1);
    for (int out : outs) {
      Layer layer;
      layer.in = in;
      layer.out = out;
      double bound = std::sqrt(6.0 / (in + out));
      layer.w.resize(static_cast<size_t>(in) * out);
      for (double& x : layer.w) x = (2.0 * rng.uniform01() - 1.0) * bound;
      layer.b.assign(static_cast<size_t>(out), 0.0);
      layers_.push_back(std::move(layer));
      in = out;
    }
  }

  int input_dim() const { return input_dim_; }
  int feature_dim() const { return (hidden_.empty() ? input_dim_ : hidden_.back()) + 1; }
  const std::vector<int>& hidden_widths() const { return hidden_; }

  double predict(const Embedding& x) const {
    check_dim(x);
    std::vector<double> a(x.begin(), x.end());
    for (size_t l = 0; l < layers_.size(); ++l) a = forward_layer(l, a, l + 1 < layers_.size());
    return a[0];
  }

  // d(output)/d(last-layer weights and bias) = (last hidden activation, 1).
  std::vector<double> gradient_features(const Embedding& x) const {
    check_dim(x);
    std::vector<double> a(x.begin(), x.end());
    for (size_t l = 0; l + 1 < layers_.size(); ++l) a = forward_layer(l, a, true);
    a.push_back(1.0);
    return a;
  }

  // Returns the final training MSE. Re-initializes from spec.init_seed unless
  // warm-starting, so identical (seed, data, spec) reproduce identical params.
  double train(std::span<const Embedding> inputs, std::span<const double> targets,
               const TrainSpec& spec) {
    spec.validate();
    if (inputs.empty()) throw Error("train: empty history");
    if (inputs.size() != targets.size()) throw Error("train: inputs/targets mismatch");
    for (const auto& x : inputs) check_dim(x);
    if (!spec.warm_start) initialize(spec.init_seed);

    const size_t n = inputs.size();
    std::vector<std::vector<double>> acts;     // per-layer activations, shared buffers
    std::vector<Layer> grads = zero_grads();
    double mse = 0.0;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      for (auto& g : grads) {
        std::fill(g.w.begin(), g.w.end(), 0.0);
        std::fill(g.b.begin(), g.b.end(), 0.0);
      }
      mse = 0.0;
      for (size_t s = 0; s < n; ++s) {
        acts.assign(1, std::vector<double>(inputs[s].begin(), inputs[s].end()));
        for (size_t l = 0; l < layers_.size(); ++l)
          acts.push_back(forward_layer(l, acts.back(), l + 1 < layers_.size()));
        double err = acts.back()[0] - targets[s];
        mse += err * err;
        // Backprop; dL/dpred = 2 err / n.
        std::vector<double> delta{2.0 * err / static_cast<double>(n)};
        for (size_t l = layers_.size(); l-- > 0;) {
          const auto& in_act = acts[l];
          auto& g = grads[l];
          const auto& layer = layers_[l];
          for (int o = 0; o < layer.out; ++o) {
            g.b[static_cast<size_t>(o)] += delta[static_cast<size_t>(o)];
            for (int i = 0; i < layer.in; ++i)
              g.w[static_cast<size_t>(o) * layer.in + i] +=
                  delta[static_cast<size_t>(o)] * in_act[static_cast<size_t>(i)];
          }
          if (l == 0) break;
          std::vector<double> prev(static_cast<size_t>(layer.in), 0.0);
          for (int i = 0; i < layer.in; ++i) {
            if (in_act[static_cast<size_t>(i)] <= 0.0) continue;  // ReLU gate
            double s2 = 0.0;
            for (int o = 0; o < layer.out; ++o)
              s2 += delta[static_cast<size_t>(o)] * layer.w[static_cast<size_t>(o) * layer.in + i];
            prev[static_cast<size_t>(i)] = s2;
          }
          delta = std::move(prev);
        }
      }
      mse /= static_cast<double>(n);
      if (!std::isfinite(mse)) throw Error("train: non-finite loss (learning rate too high?)");
      for (size_t l = 0; l < layers_.size(); ++l) {
        auto& layer = layers_[l];
        const auto& g = grads[l];
        for (size_t i = 0; i < layer.w.size(); ++i)
          layer.w[i] -= spec.learning_rate * (g.w[i] + spec.weight_decay * layer.w[i]);
        for (size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= spec.learning_rate * g.b[i];
      }
    }
    return mse;
  }

  // Flat parameter access for test oracles (finite differences).
  std::vector<double>& layer_weights(size_t l) { return layers_.at(l).w; }
  std::vector<double>& layer_bias(size_t l) { return layers_.at(l).b; }
  size_t layer_count() const { return layers_.size(); }

 private:
  struct Layer {
    int in = 0, out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;
  };

  void check_dim(const Embedding& x) const {
    if (static_cast<int>(x.size()) != input_dim_)
      throw Error("surrogate: embedding dim " + std::to_string(x.size()) +
                  " does not match input dim " + std::to_string(input_dim_));
  }

  std::vector<double> forward_layer(size_t l, const std::vector<double>& in, bool relu) const {
    const Layer& layer = layers_[l];
    std::vector<double> out(static_cast<size_t>(layer.out));
    for (int o = 0; o < layer.out; ++o) {
      double s = layer.b[static_cast<size_t>(o)];
      const double* w = layer.w.data() + static_cast<size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) s += w[i] * in[static_cast<size_t>(i)];
      out[static_cast<size_t>(o)] = relu ? std::max(s, 0.0) : s;
    }
    return out;
  }

  std::vector<Layer> zero_grads() const {
    std::vector<Layer> g(layers_.size());
    for (size_t l = 0; l < layers_.size(); ++l) {
      g[l].in = layers_[l].in;
      g[l].out = layers_[l].out;
      g[l].w.assign(layers_[l].w.size(), 0.0);
      g[l].b.assign(layers_[l].b.size(), 0.0);
    }
    return g;
  }

  int input_dim_;
  std::vector<int> hidden_;
  std::vector<Layer> layers_;
};

// Design-matrix state for the UCB uncertainty term. Maintains
// Z_inv = (lambda I + sum g g^T)^-1 through rank-one Sherman-Morrison updates;
// sigma(g) = sqrt(g^T Z_inv g) shrinks as observations accumulate.
class UncertaintyState {
 public:
  explicit UncertaintyState(int feature_dim, double lambda = 1.0)
      : dim_(feature_dim), lambda_(lambda) {
    if (feature_dim <= 0) throw Error("uncertainty: feature dim must be positive");
    if (lambda <= 0.0) throw Error("uncertainty: lambda must be positive");
    z_inv_.assign(static_cast<size_t>(dim_) * dim_, 0.0);
    for (int i = 0; i < dim_; ++i) z_inv_[static_cast<size_t>(i) * dim_ + i] = 1.0 / lambda;
  }

  int dim() const { return dim_; }
  double lambda() const { return lambda_; }

  double sigma(std::span<const double> g) const {
    check_dim(g);
    std::vector<double> zg = multiply(g);
    double q = 0.0;
    for (int i = 0; i < dim_; ++i) q += g[static_cast<size_t>(i)] * zg[static_cast<size_t>(i)];
    return std::sqrt(std::max(q, 0.0));
  }

  void update(std::span<const double> g) {
    check_dim(g);
    std::vector<double> zg = multiply(g);
    double denom = 1.0;
    for (int i = 0; i < dim_; ++i) denom += g[static_cast<size_t>(i)] * zg[static_cast<size_t>(i)];
    if (denom <= 0.0) throw Error("uncertainty: update lost positive-definiteness");
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j <= i; ++j) {
        double v = z_inv_[static_cast<size_t>(i) * dim_ + j] -
                   zg[static_cast<size_t>(i)] * zg[static_cast<size_t>(j)] / denom;
        z_inv_[static_cast<size_t>(i) * dim_ + j] = v;
        z_inv_[static_cast<size_t>(j) * dim_ + i] = v;
      }
    if (!cholesky_ok())
      throw Error("uncertainty: positive-definiteness check failed, re-factorization needed");
  }

  double at(int i, int j) const { return z_inv_[static_cast<size_t>(i) * dim_ + j]; }

 private:
  void check_dim(std::span<const double> g) const {
    if (static_cast<int>(g.size()) != dim_) throw Error("uncertainty: feature dim mismatch");
  }

  std::vector<double> multiply(std::span<const double> g) const {
    std::vector<double> out(static_cast<size_t>(dim_), 0.0);
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      const double* row = z_inv_.data() + static_cast<size_t>(i) * dim_;
      for (int j = 0; j < dim_; ++j) s += row[j] * g[static_cast<size_t>(j)];
      out[static_cast<size_t>(i)] = s;
    }
    return out;
  }

  bool cholesky_ok() const {
    std::vector<double> a(z_inv_);
    for (int c = 0; c < dim_; ++c) {
      double d = a[static_cast<size_t>(c) * dim_ + c];
      for (int k = 0; k < c; ++k) {
        double l = a[static_cast<size_t>(c) * dim_ + k];
        d -= l * l;
      }
      if (d <= 0.0 || !std::isfinite(d)) return false;
      double root = std::sqrt(d);
      a[static_cast<size_t>(c) * dim_ + c] = root;
      for (int r = c + 1; r < dim_; ++r) {
        double s = a[static_cast<size_t>(r) * dim_ + c];
        for (int k = 0; k < c; ++k)
          s -= a[static_cast<size_t>(r) * dim_ + k] * a[static_cast<size_t>(c) * dim_ + k];
        a[static_cast<size_t>(r) * dim_ + c] = s / root;
      }
    }
    return true;
  }

  int dim_;
  double lambda_;
  std::vector<double> z_inv_;
};

// NeuralUCB acquisition value: predicted score plus nu times the uncertainty.
inline double acquisition(const ScoreModel& model, const UncertaintyState& state,
                          const Embedding& x, double nu) {
  if (nu < 0.0) throw Error("acquisition: nu must be non-negative");
  double mean = model.predict(x);
  if (nu == 0.0) return mean;
  return mean + nu * state.sigma(model.gradient_features(x));
}

}  // namespace exsel
