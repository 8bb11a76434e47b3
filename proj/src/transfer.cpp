#include "edtl/transfer.hpp"

#include <cmath>
#include <stdexcept>

#include "edtl/rng.hpp"

namespace edtl {

PretrainedModel pretrain(const Dataset& source_raw, const TrainConfig& cfg,
                         const std::vector<std::size_t>& hidden_dims) {
  if (source_raw.n_rows() == 0) throw std::invalid_argument("pretrain: empty source");
  if (hidden_dims.empty()) throw std::invalid_argument("pretrain: no hidden layers");

  const auto [train_raw, val_raw] = split(source_raw, 0.9, derive_seed(cfg.seed, "pretrain-split"));
  auto [train_std, scaler] = fit_standardize(train_raw);
  const Dataset val_std = apply_scaler(val_raw, scaler);

  std::vector<std::size_t> dims;
  dims.push_back(train_std.n_features());
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(1);

  NetworkParams net = init_network(dims, derive_seed(cfg.seed, "pretrain-init"));
  TrainConfig train_cfg = cfg;
  train_cfg.seed = derive_seed(cfg.seed, "pretrain-train");
  net = train(net, train_std, train_cfg);

  PretrainedModel out;
  out.report.train_mse = evaluate_mse(net, train_std);
  out.report.val_mse = evaluate_mse(net, val_std);
  out.net = std::move(net);
  out.source_schema = source_raw.schema;
  out.scaler = std::move(scaler);
  return out;
}

NetworkParams adapt_input(const PretrainedModel& pre, const FeatureSchema& target_schema,
                          std::uint64_t seed) {
  target_schema.validate();
  NetworkParams net = pre.net;
  const std::size_t width = net.layers.front().out_dim();
  const std::size_t in_dim = target_schema.names.size();

  LayerParams adapted;
  adapted.weights = Matrix(width, in_dim);
  adapted.bias.assign(width, 0.0);
  adapted.activation = net.layers.front().activation;
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim));
  for (double& w : adapted.weights.data) w = rng.uniform(-limit, limit);

  net.layers.front() = std::move(adapted);
  return net;
}

std::vector<BaseModelSpec> make_base_specs(std::size_t hidden_count) {
  if (hidden_count < 1) throw std::invalid_argument("make_base_specs: need >= 1 hidden layer");
  std::vector<BaseModelSpec> specs;
  specs.reserve(hidden_count + 1);
  for (std::size_t j = 1; j <= hidden_count; ++j) {
    BaseModelSpec s;
    s.strategy = BaseModelSpec::Strategy::tune_hidden;
    s.hidden_index = j;
    s.description = "tune_hidden(" + std::to_string(j) + ")";
    specs.push_back(std::move(s));
  }
  BaseModelSpec all;
  all.strategy = BaseModelSpec::Strategy::tune_all;
  all.description = "tune_all";
  specs.push_back(std::move(all));
  return specs;
}

FreezeMask freeze_mask(const BaseModelSpec& spec, std::size_t layer_count,
                       bool output_trainable) {
  if (layer_count < 2) throw std::invalid_argument("freeze_mask: need >= 2 weight layers");
  FreezeMask mask = FreezeMask::all(layer_count, false);
  if (spec.strategy == BaseModelSpec::Strategy::tune_all) {
    mask = FreezeMask::all(layer_count, true);
    return mask;
  }
  const std::size_t hidden = layer_count - 1;
  if (spec.hidden_index < 1 || spec.hidden_index > hidden)
    throw std::invalid_argument("freeze_mask: hidden index out of range");
  mask.trainable[0] = true;  // adaptation layer starts from random init
  mask.trainable[spec.hidden_index - 1] = true;
  mask.trainable[layer_count - 1] = output_trainable;
  return mask;
}

NetworkParams fine_tune(const NetworkParams& adapted, const BaseModelSpec& spec,
                        const Dataset& target_train_std, const TrainConfig& cfg,
                        bool output_trainable) {
  const FreezeMask mask = freeze_mask(spec, adapted.layer_count(), output_trainable);
  return train(adapted, target_train_std, cfg, mask);
}

}  // namespace edtl
