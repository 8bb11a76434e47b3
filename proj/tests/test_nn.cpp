#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "edtl/nn.hpp"
#include "edtl/rng.hpp"
#include "support/helpers.hpp"

using namespace edtl;
using edtl::testing::bit_equal;

namespace {

NetworkParams single_linear(double w, double b) {
  NetworkParams net;
  LayerParams l;
  l.weights = Matrix(1, 1);
  l.weights(0, 0) = w;
  l.bias = {b};
  l.activation = Activation::linear;
  net.layers.push_back(l);
  return net;
}

}  // namespace

TEST_CASE("init_network shapes and determinism") {
  const auto net = init_network({3, 8, 8, 8, 8, 1}, 5);
  CHECK(net.layer_count() == 5);
  CHECK(net.hidden_count() == 4);
  CHECK(net.input_dim() == 3);
  CHECK(net.output_dim() == 1);
  for (std::size_t j = 0; j + 1 < net.layer_count(); ++j)
    CHECK(net.layers[j].activation == Activation::relu);
  CHECK(net.layers.back().activation == Activation::linear);
  for (const auto& l : net.layers)
    for (const double b : l.bias) CHECK(b == 0.0);

  CHECK(bit_equal(net, init_network({3, 8, 8, 8, 8, 1}, 5)));
  CHECK_FALSE(bit_equal(net, init_network({3, 8, 8, 8, 8, 1}, 6)));

  CHECK_THROWS_AS(init_network({3}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_network({3, 0, 1}, 1), std::invalid_argument);
}

TEST_CASE("forward: hand-computed cases") {
  SUBCASE("single linear layer W=2, b=1, x=3 -> 7") {
    const auto net = single_linear(2.0, 1.0);
    const double x[] = {3.0};
    CHECK(forward(net, x) == doctest::Approx(7.0));
  }
  SUBCASE("relu kills a negative pre-activation") {
    NetworkParams net;
    LayerParams hidden;
    hidden.weights = Matrix(1, 1);
    hidden.weights(0, 0) = -1.0;
    hidden.bias = {0.0};
    hidden.activation = Activation::relu;
    LayerParams out;
    out.weights = Matrix(1, 1);
    out.weights(0, 0) = 3.0;
    out.bias = {0.25};
    out.activation = Activation::linear;
    net.layers = {hidden, out};
    const double x[] = {5.0};
    CHECK(forward(net, x) == doctest::Approx(0.25));  // hidden clamps to 0
  }
  SUBCASE("dimension mismatch") {
    const auto net = single_linear(2.0, 1.0);
    const double x[] = {1.0, 2.0};
    CHECK_THROWS_AS(forward(net, x), std::invalid_argument);
  }
}

TEST_CASE("batched forward equals per-row forward") {
  const auto net = init_network({4, 6, 6, 1}, 11);
  Rng rng(3);
  Matrix X(16, 4);
  for (double& v : X.data) v = rng.uniform(-2.0, 2.0);
  const auto batch = forward_batch(net, X);
  for (std::size_t i = 0; i < X.rows; ++i)
    CHECK(batch[i] == doctest::Approx(forward(net, X.row(i))).epsilon(1e-15));
}

TEST_CASE("mse_loss hand cases and homogeneity") {
  const std::vector<double> y{1.0, 3.0}, yhat{2.0, 1.0};
  CHECK(mse_loss(y, yhat) == doctest::Approx(2.5));
  CHECK(mse_loss(y, y) == 0.0);

  // scaling residuals by c multiplies the loss by c^2
  const std::vector<double> y2{2.0, 6.0}, yhat2{4.0, 2.0};  // residuals doubled
  CHECK(mse_loss(y2, yhat2) == doctest::Approx(4.0 * mse_loss(y, yhat)));

  const std::vector<double> empty;
  CHECK_THROWS_AS(mse_loss(empty, empty), std::invalid_argument);
}

TEST_CASE("backward: closed form for a single linear layer") {
  // L = (y - (w x + b))^2 for one sample: dL/dw = 2 (yhat - y) x
  const auto net = single_linear(1.5, 0.25);
  Matrix X(1, 1);
  X(0, 0) = 2.0;
  const std::vector<double> y{1.0};
  const double yhat = 1.5 * 2.0 + 0.25;
  const auto g = backward(net, X, y);
  CHECK(g.layers[0].weights(0, 0) == doctest::Approx(2.0 * (yhat - 1.0) * 2.0));
  CHECK(g.layers[0].bias[0] == doctest::Approx(2.0 * (yhat - 1.0)));
}

TEST_CASE("gradient matches central finite differences on random nets") {
  Rng meta(1234);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> dims{1 + static_cast<std::size_t>(meta.index(4))};
    const std::size_t hidden_layers = 1 + meta.index(4);
    for (std::size_t j = 0; j < hidden_layers; ++j) dims.push_back(2 + meta.index(7));
    dims.push_back(1);
    const auto c = edtl::testing::make_smooth_case(dims, meta.next_u64());
    CHECK(grad_check(c.net, c.x, c.y, 1e-5) < 1e-4);
  }
}

TEST_CASE("grad_check: exact for linear, degrades with coarse h") {
  const auto net = init_network({2, 1}, 77);  // single layer => quadratic loss
  Matrix X(4, 2);
  Rng rng(5);
  for (double& v : X.data) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> y{0.5, -0.25, 1.0, 0.0};
  CHECK(grad_check(net, X, y, 1e-5) < 1e-8);

  // A relu net probed across the kink: h = 1 is far worse than h = 1e-5.
  const auto c = edtl::testing::make_smooth_case({2, 5, 5, 1}, 99, 6);
  const double coarse = grad_check(c.net, c.x, c.y, 1.0);
  const double fine = grad_check(c.net, c.x, c.y, 1e-5);
  CHECK(fine < 1e-4);
  CHECK(coarse > fine);
}

TEST_CASE("adam_step: hand oracle for one step") {
  // One scalar parameter, gradient 1, fresh state:
  // m = 0.1, v = 0.001, mhat = 1, vhat = 1 -> delta = -lr / (1 + eps)
  auto net = single_linear(0.5, 0.0);
  Gradients g;
  g.layers.resize(1);
  g.layers[0].weights = Matrix(1, 1);
  g.layers[0].weights(0, 0) = 1.0;
  g.layers[0].bias = {0.0};
  TrainConfig cfg;
  auto [stepped, state] =
      adam_step(net, g, AdamState::zeros_like(net), FreezeMask::all(1), cfg);
  const double delta = stepped.layers[0].weights(0, 0) - 0.5;
  CHECK(delta == doctest::Approx(-0.0009999999900000003).epsilon(1e-12));
  CHECK(state.step_count == 1);
}

TEST_CASE("adam_step: freeze mask and zero gradients") {
  const auto net = init_network({2, 4, 4, 1}, 31);
  Gradients g;
  g.layers.resize(net.layer_count());
  for (std::size_t j = 0; j < net.layer_count(); ++j) {
    g.layers[j].weights = Matrix(net.layers[j].weights.rows, net.layers[j].weights.cols,
                                 0.5);
    g.layers[j].bias.assign(net.layers[j].bias.size(), 0.5);
  }

  SUBCASE("only the unmasked layer changes") {
    FreezeMask mask = FreezeMask::all(net.layer_count(), false);
    mask.trainable[1] = true;
    const auto [stepped, state] =
        adam_step(net, g, AdamState::zeros_like(net), mask, TrainConfig{});
    CHECK(bit_equal(stepped.layers[0], net.layers[0]));
    CHECK_FALSE(bit_equal(stepped.layers[1], net.layers[1]));
    CHECK(bit_equal(stepped.layers[2], net.layers[2]));
    // frozen layers' moments untouched
    for (const double v : state.first_moment.layers[0].weights.data) CHECK(v == 0.0);
  }

  SUBCASE("zero gradients leave parameters unchanged") {
    for (auto& l : g.layers) {
      std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    const auto [stepped, state] = adam_step(net, g, AdamState::zeros_like(net),
                                            FreezeMask::all(net.layer_count()),
                                            TrainConfig{});
    CHECK(bit_equal(stepped, net));
  }

  SUBCASE("all-false mask is rejected") {
    CHECK_THROWS_AS(adam_step(net, g, AdamState::zeros_like(net),
                              FreezeMask::all(net.layer_count(), false), TrainConfig{}),
                    std::invalid_argument);
  }
}

TEST_CASE("train fits a linear toy problem") {
  const Dataset ds = edtl::testing::linear_toy(200, 2.0, 1.0, 0.0, 13);
  auto net = init_network({1, 16, 16, 1}, 13);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.seed = 13;
  net = train(net, ds, cfg);
  CHECK(evaluate_mse(net, ds) < 1e-2);
}

TEST_CASE("train: freeze contract and determinism") {
  const Dataset ds = edtl::testing::linear_toy(64, 1.0, 0.0, 0.05, 8);
  const auto net = init_network({1, 6, 6, 6, 1}, 4);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 99;

  SUBCASE("only the output layer trains under an output-only mask") {
    FreezeMask mask = FreezeMask::all(net.layer_count(), false);
    mask.trainable.back() = true;
    const auto tuned = train(net, ds, cfg, mask);
    for (std::size_t j = 0; j + 1 < net.layer_count(); ++j)
      CHECK(bit_equal(tuned.layers[j], net.layers[j]));
    CHECK_FALSE(bit_equal(tuned.layers.back(), net.layers.back()));
  }

  SUBCASE("same seed, same data -> bit-identical parameters") {
    const auto a = train(net, ds, cfg);
    const auto b = train(net, ds, cfg);
    CHECK(bit_equal(a, b));
  }

  SUBCASE("dimension mismatch and empty dataset error") {
    Dataset bad = ds;
    bad.schema.names = {"a", "b"};
    bad.rows = Matrix(4, 2, 1.0);
    bad.targets = {1, 2, 3, 4};
    CHECK_THROWS_AS(train(net, bad, cfg), std::invalid_argument);
    Dataset empty = ds;
    empty.rows = Matrix(0, 1);
    empty.targets = {};
    CHECK_THROWS_AS(train(net, empty, cfg), std::invalid_argument);
  }
}
