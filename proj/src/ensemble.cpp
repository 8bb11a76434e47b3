#include "edtl/ensemble.hpp"

#include <future>
#include <stdexcept>

#include "edtl/rng.hpp"

namespace edtl {

std::vector<double> base_outputs(const BaseModelSet& bases, std::span<const double> x_std) {
  std::vector<double> z(bases.count());
  for (std::size_t k = 0; k < bases.count(); ++k)
    z[k] = forward(bases.models[k], x_std);
  return z;
}

namespace {

std::vector<NetworkParams> tune_all_specs(const NetworkParams& adapted,
                                          const std::vector<BaseModelSpec>& specs,
                                          const Dataset& train_std, const TrainConfig& cfg,
                                          const EDTLOptions& options) {
  std::vector<NetworkParams> models(specs.size());
  auto tune_one = [&](std::size_t k) {
    TrainConfig base_cfg = cfg;
    base_cfg.seed = cfg.seed + k;  // run seed + spec index
    return fine_tune(adapted, specs[k], train_std, base_cfg, options.output_trainable);
  };
  if (options.parallel_bases && specs.size() > 1) {
    std::vector<std::future<NetworkParams>> futs;
    futs.reserve(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k)
      futs.push_back(std::async(std::launch::async, tune_one, k));
    for (std::size_t k = 0; k < specs.size(); ++k) models[k] = futs[k].get();
  } else {
    for (std::size_t k = 0; k < specs.size(); ++k) models[k] = tune_one(k);
  }
  return models;
}

Matrix stack_outputs(const std::vector<NetworkParams>& models, const Matrix& X_std) {
  Matrix Z(X_std.rows, models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto yk = forward_batch(models[k], X_std);
    for (std::size_t i = 0; i < X_std.rows; ++i) Z(i, k) = yk[i];
  }
  return Z;
}

}  // namespace

EDTLModel train_edtl(const PretrainedModel& pre, const Dataset& target_train_raw,
                     const TrainConfig& cfg, const SVRHyperParams& hp,
                     const EDTLOptions& options) {
  if (target_train_raw.n_rows() == 0)
    throw std::invalid_argument("train_edtl: empty target training set");

  ScalerParams scaler;
  Dataset train_std;
  if (options.reuse_source_scaler && target_train_raw.schema == pre.source_schema) {
    scaler = pre.scaler;
    train_std = apply_scaler(target_train_raw, scaler);
  } else {
    std::tie(train_std, scaler) = fit_standardize(target_train_raw);
  }

  const NetworkParams adapted =
      adapt_input(pre, target_train_raw.schema, derive_seed(cfg.seed, "adapt-input"));
  const auto specs = make_base_specs(adapted.hidden_count());

  EDTLModel model;
  model.mode = options.mode;
  model.scaler = scaler;
  model.bases.specs = specs;
  model.bases.target_schema = target_train_raw.schema;
  model.bases.models = tune_all_specs(adapted, specs, train_std, cfg, options);

  Matrix Z;
  if (options.mode == StackingMode::in_sample) {
    Z = stack_outputs(model.bases.models, train_std.rows);
  } else {
    // Out-of-fold stacking: refit the bases with each fold held out and fill
    // that fold's meta inputs from the refit, keeping leakage out of the
    // meta training set. The final bases above stay trained on all rows.
    model.folds = std::max<std::size_t>(2, options.folds);
    const std::size_t n = train_std.n_rows();
    if (model.folds > n) model.folds = n;
    const auto order = shuffled_indices(n, derive_seed(cfg.seed, "oof-folds"));
    std::vector<std::size_t> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % model.folds;

    Z = Matrix(n, specs.size());
    for (std::size_t f = 0; f < model.folds; ++f) {
      std::vector<std::size_t> in_rows, out_rows;
      for (std::size_t i = 0; i < n; ++i)
        (fold_of[i] == f ? out_rows : in_rows).push_back(i);
      if (in_rows.empty() || out_rows.empty()) continue;
      Dataset fold_train;
      fold_train.schema = train_std.schema;
      fold_train.rows = Matrix(in_rows.size(), train_std.n_features());
      fold_train.targets.resize(in_rows.size());
      for (std::size_t i = 0; i < in_rows.size(); ++i) {
        const auto src = train_std.row(in_rows[i]);
        std::copy(src.begin(), src.end(), fold_train.rows.row(i).begin());
        fold_train.targets[i] = train_std.targets[in_rows[i]];
      }
      const auto fold_models = tune_all_specs(adapted, specs, fold_train, cfg, options);
      for (const std::size_t i : out_rows) {
        const auto z = base_outputs({fold_models, specs, train_std.schema}, train_std.row(i));
        for (std::size_t k = 0; k < z.size(); ++k) Z(i, k) = z[k];
      }
    }
  }

  model.meta = fit_svr(Z, train_std.targets, hp);
  return model;
}

double predict_edtl(const EDTLModel& model, std::span<const double> x_raw) {
  const auto x_std = transform_features(model.scaler, x_raw);
  const auto z = base_outputs(model.bases, x_std);
  return invert_target(model.scaler, predict_svr(model.meta, z));
}

std::vector<double> predict_edtl_batch(const EDTLModel& model, const Matrix& X_raw) {
  std::vector<double> out(X_raw.rows);
  for (std::size_t i = 0; i < X_raw.rows; ++i) out[i] = predict_edtl(model, X_raw.row(i));
  return out;
}

}  // namespace edtl
