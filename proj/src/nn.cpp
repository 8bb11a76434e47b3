#include "edtl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "edtl/rng.hpp"

namespace edtl {

void NetworkParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("network: no layers");
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const auto& l = layers[j];
    if (l.weights.rows == 0 || l.weights.cols == 0)
      throw std::invalid_argument("network: zero-sized layer");
    if (l.weights.rows != l.bias.size())
      throw std::invalid_argument("network: weight rows != bias length");
    if (j > 0 && l.in_dim() != layers[j - 1].out_dim())
      throw std::invalid_argument("network: layer dimensions do not chain");
    const Activation want =
        (j + 1 == layers.size()) ? Activation::linear : Activation::relu;
    if (l.activation != want)
      throw std::invalid_argument("network: unexpected activation placement");
    for (const double v : l.weights.data)
      if (!std::isfinite(v)) throw std::invalid_argument("network: non-finite weight");
    for (const double v : l.bias)
      if (!std::isfinite(v)) throw std::invalid_argument("network: non-finite bias");
  }
}

void FreezeMask::validate(std::size_t layer_count) const {
  if (trainable.size() != layer_count)
    throw std::invalid_argument("freeze mask: length does not match layer count");
  if (std::none_of(trainable.begin(), trainable.end(), [](bool b) { return b; }))
    throw std::invalid_argument("freeze mask: at least one layer must be trainable");
}

AdamState AdamState::zeros_like(const NetworkParams& net) {
  AdamState s;
  for (const auto& l : net.layers) {
    Gradients::Layer z;
    z.weights = Matrix(l.weights.rows, l.weights.cols);
    z.bias.assign(l.bias.size(), 0.0);
    s.first_moment.layers.push_back(z);
    s.second_moment.layers.push_back(std::move(z));
  }
  return s;
}

NetworkParams init_network(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("init_network: need at least 2 dims");
  for (const std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("init_network: zero width layer");

  Rng rng(seed);
  NetworkParams net;
  net.layers.reserve(dims.size() - 1);
  for (std::size_t j = 0; j + 1 < dims.size(); ++j) {
    LayerParams l;
    l.weights = Matrix(dims[j + 1], dims[j]);
    l.bias.assign(dims[j + 1], 0.0);
    l.activation = (j + 2 == dims.size()) ? Activation::linear : Activation::relu;
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[j]));
    for (double& w : l.weights.data) w = rng.uniform(-limit, limit);
    net.layers.push_back(std::move(l));
  }
  return net;
}

namespace {

// Activations per layer for a batch, in one flat workspace per layer.
// acts[0] is the input batch; acts[j+1] the output of weight layer j.
std::vector<Matrix> forward_pass(const NetworkParams& net, const Matrix& X) {
  std::vector<Matrix> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(X);
  for (const auto& l : net.layers) {
    const Matrix& h = acts.back();
    Matrix z(h.rows, l.out_dim());
    for (std::size_t i = 0; i < h.rows; ++i) {
      const auto hin = h.row(i);
      auto zout = z.row(i);
      for (std::size_t o = 0; o < l.out_dim(); ++o) {
        const auto w = l.weights.row(o);
        double acc = l.bias[o];
        for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * hin[c];
        zout[o] = (l.activation == Activation::relu && acc < 0.0) ? 0.0 : acc;
      }
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

double forward(const NetworkParams& net, std::span<const double> x) {
  if (x.size() != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  std::vector<double> h(x.begin(), x.end());
  std::vector<double> z;
  for (const auto& l : net.layers) {
    z.assign(l.out_dim(), 0.0);
    for (std::size_t o = 0; o < l.out_dim(); ++o) {
      const auto w = l.weights.row(o);
      double acc = l.bias[o];
      for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * h[c];
      z[o] = (l.activation == Activation::relu && acc < 0.0) ? 0.0 : acc;
    }
    h.swap(z);
  }
  return h[0];
}

std::vector<double> forward_batch(const NetworkParams& net, const Matrix& X) {
  if (X.cols != net.input_dim())
    throw std::invalid_argument("forward_batch: input dimension mismatch");
  const auto acts = forward_pass(net, X);
  const Matrix& out = acts.back();
  std::vector<double> y(out.rows);
  for (std::size_t i = 0; i < out.rows; ++i) y[i] = out(i, 0);
  return y;
}

double mse_loss(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("mse_loss: length mismatch");
  if (y.empty()) throw std::invalid_argument("mse_loss: empty vectors");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - yhat[i];
    acc += r * r;
  }
  return acc / static_cast<double>(y.size());
}

Gradients backward(const NetworkParams& net, const Matrix& batch_x,
                   std::span<const double> batch_y) {
  if (batch_x.rows == 0) throw std::invalid_argument("backward: empty batch");
  if (batch_x.rows != batch_y.size())
    throw std::invalid_argument("backward: batch size mismatch");
  if (batch_x.cols != net.input_dim())
    throw std::invalid_argument("backward: input dimension mismatch");
  if (net.output_dim() != 1)
    throw std::invalid_argument("backward: expected a scalar-output network");

  const std::size_t n = batch_x.rows;
  const std::size_t L = net.layers.size();
  const auto acts = forward_pass(net, batch_x);

  Gradients g;
  g.layers.resize(L);
  for (std::size_t j = 0; j < L; ++j) {
    g.layers[j].weights = Matrix(net.layers[j].weights.rows, net.layers[j].weights.cols);
    g.layers[j].bias.assign(net.layers[j].bias.size(), 0.0);
  }

  // delta = dL/dz for the current layer's pre-activation (relu stored output
  // doubles as the pre-activation sign carrier: output > 0 iff z > 0).
  Matrix delta(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    delta(i, 0) = 2.0 * (acts.back()(i, 0) - batch_y[i]) / static_cast<double>(n);

  for (std::size_t j = L; j-- > 0;) {
    const auto& l = net.layers[j];
    const Matrix& h_prev = acts[j];
    auto& gl = g.layers[j];
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = delta.row(i);
      const auto h = h_prev.row(i);
      for (std::size_t o = 0; o < l.out_dim(); ++o) {
        if (d[o] == 0.0) continue;
        gl.bias[o] += d[o];
        auto gw = gl.weights.row(o);
        for (std::size_t c = 0; c < h.size(); ++c) gw[c] += d[o] * h[c];
      }
    }
    if (j == 0) break;
    const auto& below = net.layers[j - 1];
    Matrix next(n, l.in_dim());
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = delta.row(i);
      auto nd = next.row(i);
      for (std::size_t c = 0; c < l.in_dim(); ++c) {
        double acc = 0.0;
        for (std::size_t o = 0; o < l.out_dim(); ++o) acc += l.weights(o, c) * d[o];
        // relu subgradient at 0 is 0
        if (below.activation == Activation::relu && acts[j](i, c) <= 0.0) acc = 0.0;
        nd[c] = acc;
      }
    }
    delta = std::move(next);
  }
  return g;
}

void adam_step_inplace(NetworkParams& net, const Gradients& grads, AdamState& state,
                       const FreezeMask& mask, const TrainConfig& cfg) {
  mask.validate(net.layer_count());
  if (grads.layers.size() != net.layer_count())
    throw std::invalid_argument("adam_step: gradient shape mismatch");

  const std::uint64_t t = state.step_count + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

  for (std::size_t j = 0; j < net.layer_count(); ++j) {
    if (!mask.trainable[j]) continue;
    auto& l = net.layers[j];
    const auto& gl = grads.layers[j];
    auto& m = state.first_moment.layers[j];
    auto& v = state.second_moment.layers[j];
    auto update = [&](double& w, double g, double& mw, double& vw) {
      mw = cfg.beta1 * mw + (1.0 - cfg.beta1) * g;
      vw = cfg.beta2 * vw + (1.0 - cfg.beta2) * g * g;
      const double mhat = mw / bc1;
      const double vhat = vw / bc2;
      w -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon_adam);
    };
    for (std::size_t i = 0; i < l.weights.data.size(); ++i)
      update(l.weights.data[i], gl.weights.data[i], m.weights.data[i], v.weights.data[i]);
    for (std::size_t i = 0; i < l.bias.size(); ++i)
      update(l.bias[i], gl.bias[i], m.bias[i], v.bias[i]);
  }
  state.step_count = t;
}

std::pair<NetworkParams, AdamState> adam_step(NetworkParams net, const Gradients& grads,
                                              AdamState state, const FreezeMask& mask,
                                              const TrainConfig& cfg) {
  adam_step_inplace(net, grads, state, mask, cfg);
  return {std::move(net), std::move(state)};
}

NetworkParams train(const NetworkParams& net, const Dataset& ds, const TrainConfig& cfg,
                    const FreezeMask& mask) {
  if (ds.n_rows() == 0) throw std::invalid_argument("train: empty dataset");
  if (ds.n_features() != net.input_dim())
    throw std::invalid_argument("train: dataset does not match network input dim");
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be > 0");
  mask.validate(net.layer_count());

  NetworkParams out = net;
  AdamState state = AdamState::zeros_like(net);
  const std::size_t n = ds.n_rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle"));

  Matrix bx;
  std::vector<double> by;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      bx = Matrix(b, ds.n_features());
      by.resize(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto src = ds.row(order[start + i]);
        std::copy(src.begin(), src.end(), bx.row(i).begin());
        by[i] = ds.targets[order[start + i]];
      }
      const Gradients g = backward(out, bx, by);
      adam_step_inplace(out, g, state, mask, cfg);
    }
  }
  return out;
}

NetworkParams train(const NetworkParams& net, const Dataset& ds, const TrainConfig& cfg) {
  return train(net, ds, cfg, FreezeMask::all(net.layer_count()));
}

double evaluate_mse(const NetworkParams& net, const Dataset& ds) {
  const auto yhat = forward_batch(net, ds.rows);
  return mse_loss(ds.targets, yhat);
}

double grad_check(const NetworkParams& net, const Matrix& batch_x,
                  std::span<const double> batch_y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be > 0");
  const Gradients analytic = backward(net, batch_x, batch_y);
  NetworkParams probe = net;

  double worst = 0.0;
  auto check_param = [&](double& w, double g) {
    const double saved = w;
    w = saved + h;
    const double up = mse_loss(batch_y, forward_batch(probe, batch_x));
    w = saved - h;
    const double dn = mse_loss(batch_y, forward_batch(probe, batch_x));
    w = saved;
    const double numeric = (up - dn) / (2.0 * h);
    const double denom = std::max(1.0, std::abs(numeric) + std::abs(g));
    worst = std::max(worst, std::abs(numeric - g) / denom);
  };

  for (std::size_t j = 0; j < probe.layer_count(); ++j) {
    auto& l = probe.layers[j];
    const auto& gl = analytic.layers[j];
    for (std::size_t i = 0; i < l.weights.data.size(); ++i)
      check_param(l.weights.data[i], gl.weights.data[i]);
    for (std::size_t i = 0; i < l.bias.size(); ++i)
      check_param(l.bias[i], gl.bias[i]);
  }
  return worst;
}

}  // namespace edtl
