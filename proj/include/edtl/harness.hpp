#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edtl/dataset.hpp"
#include "edtl/ensemble.hpp"
#include "edtl/simulator.hpp"

namespace edtl {

// Mean absolute percentage error in raw target units; rows with |y| below
// the floor are excluded (Eq. of the metric is undefined there) and counted.
struct MapeResult {
  double percent = 0.0;
  std::size_t excluded = 0;
};
MapeResult mape(std::span<const double> y, std::span<const double> yhat,
                double denom_floor = 1e-8);

// Mean target of the k nearest training rows by Euclidean distance in
// (already standardized) feature space; distance ties break by row index.
double knn_predict(const Dataset& train, std::span<const double> x, std::size_t k);

enum class Method { direct, transfer, edtl, knn };
std::string method_name(Method m);
Method method_from_name(const std::string&);

enum class Condition { clean, anomalous };
std::string condition_name(Condition c);
Condition condition_from_name(const std::string&);

// A single-network regressor (direct or transfer) bundled with its scaler.
struct SingleNetModel {
  NetworkParams net;
  FeatureSchema schema;
  ScalerParams scaler;
};
double predict_single(const SingleNetModel& m, std::span<const double> x_raw);
std::vector<double> predict_single_batch(const SingleNetModel& m, const Matrix& X_raw);

struct MethodSettings {
  TrainConfig train;
  SVRHyperParams svr;
  std::vector<std::size_t> hidden_dims = {64, 64, 64, 64};
  std::size_t knn_k = 5;
  EDTLOptions edtl;
};

// Train-and-evaluate one leg; MAPE is computed on the clean test set in raw
// units. The model is returned so callers can persist or inspect it.
struct DirectResult { SingleNetModel model; MapeResult mape; };
struct EdtlResult { EDTLModel model; MapeResult mape; };

DirectResult run_direct(const Dataset& target_train, const Dataset& target_test,
                        const MethodSettings& s, std::uint64_t seed);
DirectResult run_transfer(const PretrainedModel& pre, const Dataset& target_train,
                          const Dataset& target_test, const MethodSettings& s,
                          std::uint64_t seed);
EdtlResult run_edtl(const PretrainedModel& pre, const Dataset& target_train,
                    const Dataset& target_test, const MethodSettings& s,
                    std::uint64_t seed);
MapeResult run_knn(const Dataset& target_train, const Dataset& target_test,
                   const MethodSettings& s);

struct ExperimentConfig {
  // data: either a simulated domain pair or a pair of CSV paths
  bool simulate = true;
  std::string source_profile = "alpha";
  std::string target_profile = "beta";
  std::size_t n_source = 20000;
  std::size_t n_target = 2000;
  double sim_dt = 0.1;
  double sim_duration = 600.0;
  std::string source_csv;
  std::string target_csv;
  std::string target_column;  // csv mode only; simulate mode uses `targets`

  std::vector<TargetKind> targets = {TargetKind::electricity};
  std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<Method> methods = {Method::direct, Method::transfer, Method::edtl};
  std::optional<AnomalySpec> anomaly;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double test_fraction = 0.2;
  MethodSettings settings;
  std::size_t workers = 0;      // 0 = hardware concurrency
  bool record_timing = true;    // false writes wall_ms as 0 (reproducible bytes)

  void validate() const;
};

struct MapeRecord {
  Method method;
  std::string target;   // "E", "M", "W", "D" or the CSV target column
  double fraction = 1.0;
  Condition condition = Condition::clean;
  std::uint64_t seed = 0;
  double mape_percent = 0.0;
  std::int64_t wall_ms = 0;

  friend bool operator==(const MapeRecord&, const MapeRecord&) = default;
};

struct CellKey {
  Method method;
  std::string target;
  double fraction;
  Condition condition;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellStats {
  double mean = 0.0;
  double stdev = 0.0;
  std::size_t n = 0;
};

struct ExperimentReport {
  std::vector<MapeRecord> records;
  std::vector<std::string> failures;  // legs that threw; sweep continues

  std::map<CellKey, CellStats> aggregates() const;
  // MAPE(anomalous) - MAPE(clean) per (method, target, fraction); present
  // only for cells that ran under both conditions.
  std::map<CellKey, double> degradation_scale() const;

  friend bool operator==(const ExperimentReport& a, const ExperimentReport& b) {
    return a.records == b.records;
  }
};

ExperimentReport run_sweep(const ExperimentConfig& cfg);

// Report CSV: header method,target,fraction,condition,seed,mape_percent,wall_ms
// with shortest-round-trip numbers; read_report(write_report(r)) == r.
void write_report_csv(const std::filesystem::path& path, const ExperimentReport& report);
ExperimentReport read_report_csv(const std::filesystem::path& path);

// Hand-emitted SVG line charts, one per (target, condition): mean MAPE vs
// fraction, one polyline per method.
void write_report_charts(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace edtl
