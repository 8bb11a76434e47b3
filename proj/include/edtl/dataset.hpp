#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edtl/matrix.hpp"

namespace edtl {

// Ordered feature names plus the name of the regression target.
struct FeatureSchema {
  std::vector<std::string> names;
  std::string target_name;

  std::size_t size() const { return names.size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;

  // Throws std::invalid_argument on duplicate names, empty list, or a target
  // that collides with a feature.
  void validate() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

// Feature matrix (row i = sample x_i) with one target value per row.
struct Dataset {
  FeatureSchema schema;
  Matrix rows;
  std::vector<double> targets;

  std::size_t n_rows() const { return rows.rows; }
  std::size_t n_features() const { return rows.cols; }
  std::span<const double> row(std::size_t i) const { return rows.row(i); }

  void validate() const;  // count/shape consistency, all values finite

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Per-feature z-score statistics fitted on a training set. Degenerate
// (constant) features get stdev 1 and pass through centered.
struct ScalerParams {
  std::vector<double> means;
  std::vector<double> stdevs;
  double target_mean = 0.0;
  double target_stdev = 1.0;

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

struct AnomalySpec {
  double row_fraction = 0.20;
  double sigma_ratio = 0.05;
  std::uint64_t seed = 0;
};

// CSV ingestion: UTF-8, header row, '.' decimal, ',' separator. The target
// column is chosen by name. Rows containing empty cells are dropped; any
// other unparsable cell is an error naming the data row and column.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);

// Shortest-round-trip decimal encoding; load_csv(write_csv(ds)) == ds.
void write_csv(const std::filesystem::path& path, const Dataset& ds);

// Fit population-stdev z-score parameters on `ds` and return the transformed
// dataset together with the parameters.
std::pair<Dataset, ScalerParams> fit_standardize(const Dataset& ds);

// Apply / invert previously fitted parameters.
Dataset apply_scaler(const Dataset& ds, const ScalerParams& p);
Dataset invert_scaler(const Dataset& ds, const ScalerParams& p);
std::vector<double> transform_features(const ScalerParams& p, std::span<const double> x);
double transform_target(const ScalerParams& p, double y);
double invert_target(const ScalerParams& p, double y_std);

// Deterministic shuffled split into (train, test); train gets
// round(train_fraction * N) rows, clamped so both parts are non-empty.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed);

// Uniform sample without replacement of round(fraction * N) rows taken as a
// fixed shuffled prefix, so fraction grids with one seed are nested.
Dataset subsample_fraction(const Dataset& ds, double fraction, std::uint64_t seed);

// Gaussian sensor-noise corruption of exactly round(row_fraction * N) rows:
// sigma_j = sigma_ratio * mean(|column j|). Targets and unselected rows are
// untouched. Must run on raw (unstandardized) data.
Dataset inject_anomalies(const Dataset& ds, const AnomalySpec& spec);

// Top-k features by |Pearson correlation| with the target; output keeps the
// input schema order. Constant columns correlate 0 and rank last.
FeatureSchema select_features(const Dataset& ds, std::size_t k);

// Project a dataset onto a sub-schema (features must exist in ds.schema).
Dataset select_columns(const Dataset& ds, const FeatureSchema& schema);

}  // namespace edtl
