#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edtl/dataset.hpp"
#include "edtl/nn.hpp"

namespace edtl {

struct TrainReport {
  double train_mse = 0.0;
  double val_mse = 0.0;
};

// Network trained on the data-rich source line, together with everything
// needed to reuse it: the source schema and the scaler it was trained under.
struct PretrainedModel {
  NetworkParams net;
  FeatureSchema source_schema;
  ScalerParams scaler;
  TrainReport report;
};

// 90/10 split of the raw source data, z-score fitted on the train part only,
// full-network training; validation MSE is recorded in standardized units.
PretrainedModel pretrain(const Dataset& source_raw, const TrainConfig& cfg,
                         const std::vector<std::size_t>& hidden_dims = {64, 64, 64, 64});

// Replace the first weight layer with a freshly He-initialized layer of shape
// (first-hidden-width x target feature count); all deeper layers are copied
// verbatim, so the layer count is unchanged. Applied even when the schemas
// coincide, so every transfer goes through the same construction.
NetworkParams adapt_input(const PretrainedModel& pre, const FeatureSchema& target_schema,
                          std::uint64_t seed);

// One fine-tuning strategy: either a single designated hidden layer is
// trainable (plus the adaptation layer, which is always trainable because it
// starts from random init) or the whole network is.
struct BaseModelSpec {
  enum class Strategy { tune_hidden, tune_all };
  Strategy strategy = Strategy::tune_all;
  std::size_t hidden_index = 0;  // 1-based, used by tune_hidden
  std::string description;
};

// J specs tune_hidden(1..J) plus tune_all; k = J + 1 base models.
std::vector<BaseModelSpec> make_base_specs(std::size_t hidden_count);

// Per-layer trainability for a spec. "Hidden layer j" means the weight layer
// producing hidden activation h_j, i.e. weight layer j-1; for j = 1 that is
// the adaptation layer itself. The output layer follows `output_trainable`.
FreezeMask freeze_mask(const BaseModelSpec& spec, std::size_t layer_count,
                       bool output_trainable = true);

NetworkParams fine_tune(const NetworkParams& adapted, const BaseModelSpec& spec,
                        const Dataset& target_train_std, const TrainConfig& cfg,
                        bool output_trainable = true);

// The k fine-tuned networks sharing one target schema.
struct BaseModelSet {
  std::vector<NetworkParams> models;
  std::vector<BaseModelSpec> specs;
  FeatureSchema target_schema;

  std::size_t count() const { return models.size(); }
};

}  // namespace edtl
