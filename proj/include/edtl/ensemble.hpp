#pragma once

#include <cstdint>
#include <vector>

#include "edtl/dataset.hpp"
#include "edtl/svr.hpp"
#include "edtl/transfer.hpp"

namespace edtl {

enum class StackingMode { in_sample, out_of_fold };

struct EDTLOptions {
  StackingMode mode = StackingMode::in_sample;
  std::size_t folds = 5;            // used by out_of_fold
  bool output_trainable = true;     // see freeze_mask
  bool reuse_source_scaler = false; // only honored when schemas are identical
  bool parallel_bases = true;       // fine-tunes are independent given seeds
};

// The assembled predictor of the whole pipeline: k transferred base networks
// plus the SVR meta-regressor over their output vectors, carrying the
// target-domain scaler so predictions come back in raw target units.
struct EDTLModel {
  BaseModelSet bases;
  SVRModel meta;
  ScalerParams scaler;
  StackingMode mode = StackingMode::in_sample;
  std::size_t folds = 0;
};

// z = [f_1(x), ..., f_k(x)] in spec order; x in standardized feature space.
std::vector<double> base_outputs(const BaseModelSet& bases, std::span<const double> x_std);

// Full EDTL training on a raw (unstandardized) target training set:
// adapt_input -> make_base_specs -> fine_tune each spec -> stack base outputs
// -> fit_svr. Base fine-tune seeds derive from cfg.seed + spec index.
EDTLModel train_edtl(const PretrainedModel& pre, const Dataset& target_train_raw,
                     const TrainConfig& cfg, const SVRHyperParams& hp,
                     const EDTLOptions& options = {});

// predict_svr over the base output vector, then inverse target scaling.
double predict_edtl(const EDTLModel& model, std::span<const double> x_raw);
std::vector<double> predict_edtl_batch(const EDTLModel& model, const Matrix& X_raw);

}  // namespace edtl
