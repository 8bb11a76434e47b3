#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "edtl/dataset.hpp"
#include "edtl/nn.hpp"
#include "edtl/rng.hpp"

namespace edtl::testing {

// y = slope * x + intercept + noise on a single feature.
inline Dataset linear_toy(std::size_t n, double slope, double intercept, double noise,
                          std::uint64_t seed) {
  Dataset ds;
  ds.schema.names = {"x"};
  ds.schema.target_name = "y";
  ds.rows = Matrix(n, 1);
  ds.targets.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    ds.rows(i, 0) = x;
    ds.targets[i] = slope * x + intercept + (noise > 0 ? rng.normal(0.0, noise) : 0.0);
  }
  return ds;
}

// Random batch whose relu pre-activations all stay clear of the kink, so
// finite differences at small h see a smooth function.
inline bool away_from_kinks(const NetworkParams& net, std::span<const double> x,
                            double margin) {
  std::vector<double> h(x.begin(), x.end());
  std::vector<double> z;
  for (const auto& l : net.layers) {
    z.assign(l.out_dim(), 0.0);
    for (std::size_t o = 0; o < l.out_dim(); ++o) {
      const auto w = l.weights.row(o);
      double acc = l.bias[o];
      for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * h[c];
      if (l.activation == Activation::relu && std::abs(acc) < margin) return false;
      z[o] = (l.activation == Activation::relu && acc < 0.0) ? 0.0 : acc;
    }
    h.swap(z);
  }
  return true;
}

struct SmoothCase {
  NetworkParams net;
  Matrix x;
  std::vector<double> y;
};

// A random network with non-zero biases plus a batch whose pre-activations
// all clear the kink margin. Bias randomization matters: a fully dead
// zero-bias layer would pin downstream pre-activations at exactly 0, and no
// input could ever clear the margin.
inline SmoothCase make_smooth_case(const std::vector<std::size_t>& dims,
                                   std::uint64_t seed, std::size_t n = 5,
                                   double margin = 1e-2) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    NetworkParams net = init_network(dims, rng.next_u64());
    for (auto& l : net.layers)
      for (double& b : l.bias) b = rng.uniform(-0.3, 0.3);

    Matrix X(n, dims.front());
    std::vector<double> y(n);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      ok = false;
      std::vector<double> x(dims.front());
      for (int tries = 0; tries < 200 && !ok; ++tries) {
        for (double& v : x) v = rng.uniform(-1.5, 1.5);
        if (away_from_kinks(net, x, margin)) {
          std::copy(x.begin(), x.end(), X.row(i).begin());
          y[i] = rng.uniform(-1.0, 1.0);
          ok = true;
        }
      }
    }
    if (ok) return {std::move(net), std::move(X), std::move(y)};
  }
  throw std::runtime_error("could not build a smooth gradient-check case");
}

inline bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  return std::equal(a.data.begin(), a.data.end(), b.data.begin(),
                    [](double x, double y) {
                      return std::memcmp(&x, &y, sizeof(double)) == 0;
                    });
}

inline bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) {
    return std::memcmp(&x, &y, sizeof(double)) == 0;
  });
}

inline bool bit_equal(const LayerParams& a, const LayerParams& b) {
  return a.activation == b.activation && bit_equal(a.weights, b.weights) &&
         bit_equal(a.bias, b.bias);
}

inline bool bit_equal(const NetworkParams& a, const NetworkParams& b) {
  if (a.layer_count() != b.layer_count()) return false;
  for (std::size_t i = 0; i < a.layer_count(); ++i)
    if (!bit_equal(a.layers[i], b.layers[i])) return false;
  return true;
}

}  // namespace edtl::testing
