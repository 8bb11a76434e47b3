#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "edtl/dataset.hpp"
#include "edtl/matrix.hpp"

namespace edtl {

enum class Activation { relu, linear };

struct LayerParams {
  Matrix weights;            // out_dim x in_dim
  std::vector<double> bias;  // out_dim
  Activation activation = Activation::relu;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Weight layers chained input -> hidden... -> scalar output. Hidden layers
// are relu, the final layer is linear. For the default architecture of one
// input, four hidden and one output node layer this holds five weight layers.
struct NetworkParams {
  std::vector<LayerParams> layers;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
  std::size_t layer_count() const { return layers.size(); }
  // Hidden node layers; one fewer than weight layers.
  std::size_t hidden_count() const { return layers.size() - 1; }

  void validate() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Per-layer trainability flags used during fine-tuning.
struct FreezeMask {
  std::vector<bool> trainable;

  static FreezeMask all(std::size_t layer_count, bool value = true) {
    FreezeMask m;
    m.trainable.assign(layer_count, value);
    return m;
  }
  void validate(std::size_t layer_count) const;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_adam = 1e-8;
  std::uint64_t seed = 0;
};

// Gradient of the loss, same shapes as the network.
struct Gradients {
  struct Layer {
    Matrix weights;
    std::vector<double> bias;
  };
  std::vector<Layer> layers;
};

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step_count = 0;

  static AdamState zeros_like(const NetworkParams& net);
};

// He-uniform weights scaled by fan-in, zero biases, deterministic per seed.
// dims = node-layer widths, so dims [3,8,8,8,8,1] gives 5 weight layers.
NetworkParams init_network(const std::vector<std::size_t>& dims, std::uint64_t seed);

double forward(const NetworkParams& net, std::span<const double> x);
std::vector<double> forward_batch(const NetworkParams& net, const Matrix& X);

// (1/N) sum (y_i - yhat_i)^2
double mse_loss(std::span<const double> y, std::span<const double> yhat);

// Analytic gradient of the mean squared error over the batch with respect to
// every weight and bias. The relu subgradient at 0 is taken as 0.
Gradients backward(const NetworkParams& net, const Matrix& batch_x,
                   std::span<const double> batch_y);

// One bias-corrected Adam update applied to trainable layers only; frozen
// layers and their optimizer state are left bit-identical.
void adam_step_inplace(NetworkParams& net, const Gradients& grads, AdamState& state,
                       const FreezeMask& mask, const TrainConfig& cfg);
std::pair<NetworkParams, AdamState> adam_step(NetworkParams net, const Gradients& grads,
                                              AdamState state, const FreezeMask& mask,
                                              const TrainConfig& cfg);

// Mini-batch training: one shuffle per epoch drawn from cfg.seed, batches of
// cfg.batch_size (last batch may be short), Adam updates under `mask`.
NetworkParams train(const NetworkParams& net, const Dataset& ds, const TrainConfig& cfg,
                    const FreezeMask& mask);
NetworkParams train(const NetworkParams& net, const Dataset& ds, const TrainConfig& cfg);

double evaluate_mse(const NetworkParams& net, const Dataset& ds);

// Worst relative error between backward() and central finite differences of
// step h over every parameter. Test oracle; O(parameters * network).
double grad_check(const NetworkParams& net, const Matrix& batch_x,
                  std::span<const double> batch_y, double h);

}  // namespace edtl
