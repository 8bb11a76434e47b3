#include "edtl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "edtl/rng.hpp"

namespace edtl {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::optional<std::size_t> FeatureSchema::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

void FeatureSchema::validate() const {
  if (names.empty()) throw std::invalid_argument("schema: feature list is empty");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second)
      throw std::invalid_argument("schema: duplicate feature name '" + n + "'");
  }
  if (seen.count(target_name))
    throw std::invalid_argument("schema: target '" + target_name +
                                "' is also a feature");
}

void Dataset::validate() const {
  schema.validate();
  if (rows.cols != schema.names.size())
    throw std::invalid_argument("dataset: column count does not match schema");
  if (rows.rows != targets.size())
    throw std::invalid_argument("dataset: row count does not match target count");
  for (const double v : rows.data)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
  for (const double v : targets)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite target value");
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF)
    line.erase(0, 3);  // UTF-8 BOM

  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);
  {
    std::set<std::string> seen;
    for (const auto& h : header)
      if (!seen.insert(h).second)
        throw std::runtime_error(path.string() + ": duplicate column name '" + h + "'");
  }
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end())
    throw std::runtime_error(path.string() + ": target column '" + target_column +
                             "' not found in header");
  const std::size_t target_idx = static_cast<std::size_t>(target_it - header.begin());

  FeatureSchema schema;
  schema.target_name = target_column;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != target_idx) schema.names.push_back(header[c]);

  std::vector<double> values;
  std::vector<double> targets;
  std::size_t data_row = 0;
  std::vector<double> parsed(header.size());
  while (std::getline(in, line)) {
    ++data_row;
    if (trim(line).empty()) continue;  // blank line
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << path.string() << ": row " << data_row << " has " << cells.size()
         << " cells, expected " << header.size();
      throw std::runtime_error(os.str());
    }
    bool missing = false;
    for (std::size_t c = 0; c < cells.size() && !missing; ++c) {
      const std::string cell = trim(cells[c]);
      if (cell.empty()) {
        missing = true;  // missing value: drop the row
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        std::ostringstream os;
        os << path.string() << ": row " << data_row << ", column '" << header[c]
           << "': cannot parse '" << cell << "' as a number";
        throw std::runtime_error(os.str());
      }
      parsed[c] = v;
    }
    if (missing) continue;
    for (std::size_t c = 0; c < parsed.size(); ++c)
      if (c != target_idx) values.push_back(parsed[c]);
    targets.push_back(parsed[target_idx]);
  }
  if (targets.empty()) throw std::runtime_error(path.string() + ": no rows");

  Dataset ds;
  ds.schema = std::move(schema);
  ds.rows.rows = targets.size();
  ds.rows.cols = header.size() - 1;
  ds.rows.data = std::move(values);
  ds.targets = std::move(targets);
  ds.validate();
  return ds;
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  for (const auto& n : ds.schema.names) out << n << ',';
  out << ds.schema.target_name << '\n';
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    const auto r = ds.row(i);
    for (const double v : r) out << format_double(v) << ',';
    out << format_double(ds.targets[i]) << '\n';
  }
}

std::pair<Dataset, ScalerParams> fit_standardize(const Dataset& ds) {
  if (ds.n_rows() == 0) throw std::invalid_argument("fit_standardize: empty dataset");
  const std::size_t n = ds.n_rows(), d = ds.n_features();
  ScalerParams p;
  p.means.assign(d, 0.0);
  p.stdevs.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.rows(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dlt = ds.rows(i, c) - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(n);
    p.means[c] = mean;
    p.stdevs[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  double tmean = std::accumulate(ds.targets.begin(), ds.targets.end(), 0.0) /
                 static_cast<double>(n);
  double tvar = 0.0;
  for (const double y : ds.targets) tvar += (y - tmean) * (y - tmean);
  tvar /= static_cast<double>(n);
  p.target_mean = tmean;
  p.target_stdev = tvar > 0.0 ? std::sqrt(tvar) : 1.0;
  return {apply_scaler(ds, p), p};
}

Dataset apply_scaler(const Dataset& ds, const ScalerParams& p) {
  if (p.means.size() != ds.n_features())
    throw std::invalid_argument("apply_scaler: scaler does not match schema");
  Dataset out = ds;
  for (std::size_t i = 0; i < out.n_rows(); ++i)
    for (std::size_t c = 0; c < out.n_features(); ++c)
      out.rows(i, c) = (out.rows(i, c) - p.means[c]) / p.stdevs[c];
  for (double& y : out.targets) y = (y - p.target_mean) / p.target_stdev;
  return out;
}

Dataset invert_scaler(const Dataset& ds, const ScalerParams& p) {
  if (p.means.size() != ds.n_features())
    throw std::invalid_argument("invert_scaler: scaler does not match schema");
  Dataset out = ds;
  for (std::size_t i = 0; i < out.n_rows(); ++i)
    for (std::size_t c = 0; c < out.n_features(); ++c)
      out.rows(i, c) = out.rows(i, c) * p.stdevs[c] + p.means[c];
  for (double& y : out.targets) y = y * p.target_stdev + p.target_mean;
  return out;
}

std::vector<double> transform_features(const ScalerParams& p, std::span<const double> x) {
  if (p.means.size() != x.size())
    throw std::invalid_argument("transform_features: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - p.means[c]) / p.stdevs[c];
  return out;
}

double transform_target(const ScalerParams& p, double y) {
  return (y - p.target_mean) / p.target_stdev;
}

double invert_target(const ScalerParams& p, double y_std) {
  return y_std * p.target_stdev + p.target_mean;
}

namespace {

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> idx) {
  Dataset out;
  out.schema = ds.schema;
  out.rows = Matrix(idx.size(), ds.n_features());
  out.targets.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = ds.row(idx[i]);
    std::copy(src.begin(), src.end(), out.rows.row(i).begin());
    out.targets[i] = ds.targets[idx[i]];
  }
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must be in (0, 1)");
  const std::size_t n = ds.n_rows();
  if (n < 2) throw std::invalid_argument("split: need at least 2 rows");
  auto idx = shuffled_indices(n, seed);
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const std::span<const std::size_t> all(idx);
  return {take_rows(ds, all.subspan(0, n_train)), take_rows(ds, all.subspan(n_train))};
}

Dataset subsample_fraction(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("subsample_fraction: fraction must be in (0, 1]");
  const auto idx = shuffled_indices(ds.n_rows(), seed);
  const std::size_t k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(ds.n_rows())));
  return take_rows(ds, std::span<const std::size_t>(idx).subspan(0, k));
}

Dataset inject_anomalies(const Dataset& ds, const AnomalySpec& spec) {
  if (!(spec.row_fraction >= 0.0 && spec.row_fraction <= 1.0))
    throw std::invalid_argument("inject_anomalies: row_fraction must be in [0, 1]");
  if (spec.sigma_ratio < 0.0)
    throw std::invalid_argument("inject_anomalies: sigma_ratio must be >= 0");
  Dataset out = ds;
  const std::size_t n = ds.n_rows(), d = ds.n_features();
  const std::size_t k = static_cast<std::size_t>(
      std::llround(spec.row_fraction * static_cast<double>(n)));
  if (k == 0) return out;

  // sigma_j = sigma_ratio * mean(|column j|)
  std::vector<double> sigma(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(ds.rows(i, c));
    sigma[c] = spec.sigma_ratio * acc / static_cast<double>(n);
  }

  auto idx = shuffled_indices(n, derive_seed(spec.seed, "anomaly-rows"));
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  for (const std::size_t i : idx) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    for (std::size_t c = 0; c < d; ++c)
      out.rows(i, c) += rng.normal(0.0, sigma[c]);
  }
  return out;
}

FeatureSchema select_features(const Dataset& ds, std::size_t k) {
  if (k < 1 || k > ds.n_features())
    throw std::invalid_argument("select_features: k out of range");
  const std::size_t n = ds.n_rows(), d = ds.n_features();

  const double ymean = std::accumulate(ds.targets.begin(), ds.targets.end(), 0.0) /
                       static_cast<double>(n);
  double yvar = 0.0;
  for (const double y : ds.targets) yvar += (y - ymean) * (y - ymean);

  std::vector<double> score(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.rows(i, c);
    mean /= static_cast<double>(n);
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = ds.rows(i, c) - mean;
      cov += dx * (ds.targets[i] - ymean);
      var += dx * dx;
    }
    const double denom = std::sqrt(var * yvar);
    score[c] = denom > 0.0 ? std::abs(cov / denom) : 0.0;  // constant column -> 0
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());  // preserve schema order in the output

  FeatureSchema out;
  out.target_name = ds.schema.target_name;
  for (const std::size_t c : order) out.names.push_back(ds.schema.names[c]);
  return out;
}

Dataset select_columns(const Dataset& ds, const FeatureSchema& schema) {
  std::vector<std::size_t> cols;
  cols.reserve(schema.names.size());
  for (const auto& name : schema.names) {
    const auto idx = ds.schema.index_of(name);
    if (!idx)
      throw std::invalid_argument("select_columns: feature '" + name +
                                  "' not present in dataset");
    cols.push_back(*idx);
  }
  Dataset out;
  out.schema = schema;
  out.schema.target_name = ds.schema.target_name;
  out.rows = Matrix(ds.n_rows(), cols.size());
  out.targets = ds.targets;
  for (std::size_t i = 0; i < ds.n_rows(); ++i)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out.rows(i, c) = ds.rows(i, cols[c]);
  return out;
}

}  // namespace edtl
