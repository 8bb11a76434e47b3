#include "edtl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "edtl/rng.hpp"

namespace edtl {

MapeResult mape(std::span<const double> y, std::span<const double> yhat,
                double denom_floor) {
  if (y.size() != yhat.size()) throw std::invalid_argument("mape: length mismatch");
  if (y.empty()) throw std::invalid_argument("mape: empty vectors");
  double acc = 0.0;
  std::size_t used = 0, excluded = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) < denom_floor) {
      ++excluded;
      continue;
    }
    acc += std::abs((y[i] - yhat[i]) / y[i]);
    ++used;
  }
  if (used == 0) throw std::runtime_error("mape: all rows excluded by the denominator floor");
  return {acc / static_cast<double>(used) * 100.0, excluded};
}

double knn_predict(const Dataset& train, std::span<const double> x, std::size_t k) {
  const std::size_t n = train.n_rows();
  if (n == 0) throw std::invalid_argument("knn_predict: empty training set");
  if (k < 1 || k > n) throw std::invalid_argument("knn_predict: k out of range");
  if (x.size() != train.n_features())
    throw std::invalid_argument("knn_predict: dimension mismatch");

  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    double sq = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double d = r[c] - x[c];
      sq += d * d;
    }
    dist[i] = {sq, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                    dist.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += train.targets[dist[i].second];
  return acc / static_cast<double>(k);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::direct: return "direct";
    case Method::transfer: return "transfer";
    case Method::edtl: return "edtl";
    case Method::knn: return "knn";
  }
  throw std::logic_error("method_name: bad method");
}

Method method_from_name(const std::string& s) {
  if (s == "direct") return Method::direct;
  if (s == "transfer") return Method::transfer;
  if (s == "edtl") return Method::edtl;
  if (s == "knn") return Method::knn;
  throw std::invalid_argument("unknown method '" + s + "'");
}

std::string condition_name(Condition c) {
  return c == Condition::clean ? "clean" : "anomalous";
}

Condition condition_from_name(const std::string& s) {
  if (s == "clean") return Condition::clean;
  if (s == "anomalous") return Condition::anomalous;
  throw std::invalid_argument("unknown condition '" + s + "'");
}

double predict_single(const SingleNetModel& m, std::span<const double> x_raw) {
  const auto x = transform_features(m.scaler, x_raw);
  return invert_target(m.scaler, forward(m.net, x));
}

std::vector<double> predict_single_batch(const SingleNetModel& m, const Matrix& X_raw) {
  std::vector<double> out(X_raw.rows);
  for (std::size_t i = 0; i < X_raw.rows; ++i) out[i] = predict_single(m, X_raw.row(i));
  return out;
}

namespace {

MapeResult eval_on_test(const std::vector<double>& yhat, const Dataset& test) {
  return mape(test.targets, yhat);
}

}  // namespace

DirectResult run_direct(const Dataset& target_train, const Dataset& target_test,
                        const MethodSettings& s, std::uint64_t seed) {
  auto [train_std, scaler] = fit_standardize(target_train);
  std::vector<std::size_t> dims;
  dims.push_back(train_std.n_features());
  dims.insert(dims.end(), s.hidden_dims.begin(), s.hidden_dims.end());
  dims.push_back(1);
  NetworkParams net = init_network(dims, derive_seed(seed, "direct-init"));
  TrainConfig cfg = s.train;
  cfg.seed = derive_seed(seed, "direct-train");
  net = train(net, train_std, cfg);

  DirectResult out;
  out.model = {std::move(net), target_train.schema, std::move(scaler)};
  out.mape = eval_on_test(predict_single_batch(out.model, target_test.rows), target_test);
  return out;
}

DirectResult run_transfer(const PretrainedModel& pre, const Dataset& target_train,
                          const Dataset& target_test, const MethodSettings& s,
                          std::uint64_t seed) {
  auto [train_std, scaler] = fit_standardize(target_train);
  NetworkParams adapted =
      adapt_input(pre, target_train.schema, derive_seed(seed, "transfer-adapt"));
  BaseModelSpec all;
  all.strategy = BaseModelSpec::Strategy::tune_all;
  all.description = "tune_all";
  TrainConfig cfg = s.train;
  cfg.seed = derive_seed(seed, "transfer-train");
  NetworkParams net = fine_tune(adapted, all, train_std, cfg, true);

  DirectResult out;
  out.model = {std::move(net), target_train.schema, std::move(scaler)};
  out.mape = eval_on_test(predict_single_batch(out.model, target_test.rows), target_test);
  return out;
}

EdtlResult run_edtl(const PretrainedModel& pre, const Dataset& target_train,
                    const Dataset& target_test, const MethodSettings& s,
                    std::uint64_t seed) {
  TrainConfig cfg = s.train;
  cfg.seed = derive_seed(seed, "edtl-train");
  EdtlResult out;
  out.model = train_edtl(pre, target_train, cfg, s.svr, s.edtl);
  out.mape = eval_on_test(predict_edtl_batch(out.model, target_test.rows), target_test);
  return out;
}

MapeResult run_knn(const Dataset& target_train, const Dataset& target_test,
                   const MethodSettings& s) {
  auto [train_std, scaler] = fit_standardize(target_train);
  // Keep raw targets: the neighbor mean is already in target units.
  train_std.targets = target_train.targets;
  const std::size_t k = std::min(s.knn_k, train_std.n_rows());
  std::vector<double> yhat(target_test.n_rows());
  for (std::size_t i = 0; i < target_test.n_rows(); ++i) {
    const auto x = transform_features(scaler, target_test.row(i));
    yhat[i] = knn_predict(train_std, x, k);
  }
  return eval_on_test(yhat, target_test);
}

void ExperimentConfig::validate() const {
  if (targets.empty()) throw std::invalid_argument("config: no targets");
  if (fractions.empty()) throw std::invalid_argument("config: no fractions");
  for (const double f : fractions)
    if (!(f > 0.0 && f <= 1.0))
      throw std::invalid_argument("config: fractions must be in (0, 1]");
  if (methods.empty()) throw std::invalid_argument("config: no methods");
  if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("config: test_fraction must be in (0, 1)");
  if (!simulate && (source_csv.empty() != target_csv.empty()))
    throw std::invalid_argument("config: csv mode needs both source_csv and target_csv");
  if (!simulate && target_csv.empty())
    throw std::invalid_argument("config: csv mode needs target_csv");
  if (!simulate && target_column.empty())
    throw std::invalid_argument("config: csv mode needs target_column");
}

namespace {

bool needs_pretrain(const std::vector<Method>& methods) {
  return std::any_of(methods.begin(), methods.end(), [](Method m) {
    return m == Method::transfer || m == Method::edtl;
  });
}

struct CellJob {
  TargetKind kind{};
  std::string target_label;
  std::uint64_t seed = 0;
};

// All legs for one (target, seed) pair: data generation, one shared pretrain,
// one shared train/test split, then fraction x condition x method.
void run_cell(const ExperimentConfig& cfg, const CellJob& job,
              std::vector<MapeRecord>& records, std::vector<std::string>& failures) {
  Dataset source, target;
  if (cfg.simulate) {
    std::tie(source, target) = make_domain_pair(
        profile_by_name(cfg.source_profile), profile_by_name(cfg.target_profile),
        cfg.n_source, cfg.n_target, job.seed, job.kind, cfg.sim_dt, cfg.sim_duration);
  } else {
    target = load_csv(cfg.target_csv, cfg.target_column);
    if (!cfg.source_csv.empty()) source = load_csv(cfg.source_csv, cfg.target_column);
  }

  std::optional<PretrainedModel> pre;
  if (needs_pretrain(cfg.methods)) {
    if (source.n_rows() == 0)
      throw std::runtime_error("transfer/edtl requested but no source data configured");
    TrainConfig pre_cfg = cfg.settings.train;
    pre_cfg.seed = derive_seed(job.seed, "pretrain");
    pre = pretrain(source, pre_cfg, cfg.settings.hidden_dims);
  }

  const auto [pool, test] =
      split(target, 1.0 - cfg.test_fraction, derive_seed(job.seed, "holdout"));

  for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
    const double fraction = cfg.fractions[fi];
    const Dataset sub = subsample_fraction(pool, fraction, derive_seed(job.seed, "subsample"));

    std::vector<Condition> conditions = {Condition::clean};
    if (cfg.anomaly) conditions.push_back(Condition::anomalous);
    for (const Condition condition : conditions) {
      Dataset train_ds = sub;
      if (condition == Condition::anomalous) {
        AnomalySpec spec = *cfg.anomaly;
        spec.seed = derive_seed(job.seed, "anomaly");
        train_ds = inject_anomalies(sub, spec);
      }

      for (const Method method : cfg.methods) {
        const auto t0 = std::chrono::steady_clock::now();
        MapeRecord rec;
        rec.method = method;
        rec.target = job.target_label;
        rec.fraction = fraction;
        rec.condition = condition;
        rec.seed = job.seed;
        try {
          const std::uint64_t leg_seed =
              derive_seed(job.seed, method_name(method) + "/" + std::to_string(fi) + "/" +
                                        condition_name(condition));
          MapeResult r;
          switch (method) {
            case Method::direct:
              r = run_direct(train_ds, test, cfg.settings, leg_seed).mape;
              break;
            case Method::transfer:
              r = run_transfer(*pre, train_ds, test, cfg.settings, leg_seed).mape;
              break;
            case Method::edtl:
              r = run_edtl(*pre, train_ds, test, cfg.settings, leg_seed).mape;
              break;
            case Method::knn:
              r = run_knn(train_ds, test, cfg.settings);
              break;
          }
          rec.mape_percent = r.percent;
          if (cfg.record_timing) {
            rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
          }
          records.push_back(rec);
        } catch (const std::exception& e) {
          std::ostringstream os;
          os << method_name(method) << "/" << job.target_label << "/" << fraction << "/"
             << condition_name(condition) << "/seed=" << job.seed << ": " << e.what();
          failures.push_back(os.str());
        }
      }
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ExperimentReport run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();

  std::vector<CellJob> jobs;
  if (cfg.simulate) {
    for (const TargetKind kind : cfg.targets)
      for (const std::uint64_t seed : cfg.seeds)
        jobs.push_back({kind, target_name(kind), seed});
  } else {
    for (const std::uint64_t seed : cfg.seeds)
      jobs.push_back({TargetKind::electricity, cfg.target_column, seed});
  }

  const std::size_t workers =
      cfg.workers > 0 ? cfg.workers
                      : std::max<std::size_t>(1, std::thread::hardware_concurrency());

  std::vector<std::vector<MapeRecord>> cell_records(jobs.size());
  std::vector<std::vector<std::string>> cell_failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      try {
        run_cell(cfg, jobs[i], cell_records[i], cell_failures[i]);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "cell " << jobs[i].target_label << "/seed=" << jobs[i].seed << ": "
           << e.what();
        cell_failures[i].push_back(os.str());
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(workers, jobs.size()); ++t)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ExperimentReport report;
  for (auto& rs : cell_records)
    report.records.insert(report.records.end(), rs.begin(), rs.end());
  for (auto& fs : cell_failures)
    report.failures.insert(report.failures.end(), fs.begin(), fs.end());

  // Deterministic order regardless of scheduling.
  std::sort(report.records.begin(), report.records.end(),
            [](const MapeRecord& a, const MapeRecord& b) {
              return std::tie(a.method, a.target, a.fraction, a.condition, a.seed) <
                     std::tie(b.method, b.target, b.fraction, b.condition, b.seed);
            });
  std::sort(report.failures.begin(), report.failures.end());
  return report;
}

std::map<CellKey, CellStats> ExperimentReport::aggregates() const {
  std::map<CellKey, std::vector<double>> groups;
  for (const auto& r : records)
    groups[{r.method, r.target, r.fraction, r.condition}].push_back(r.mape_percent);
  std::map<CellKey, CellStats> out;
  for (const auto& [key, values] : groups) {
    CellStats s;
    s.n = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    if (values.size() > 1) {
      double acc = 0.0;
      for (const double v : values) acc += (v - s.mean) * (v - s.mean);
      s.stdev = std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    out.emplace(key, s);
  }
  return out;
}

std::map<CellKey, double> ExperimentReport::degradation_scale() const {
  const auto agg = aggregates();
  std::map<CellKey, double> out;
  for (const auto& [key, stats] : agg) {
    if (key.condition != Condition::anomalous) continue;
    CellKey clean_key = key;
    clean_key.condition = Condition::clean;
    const auto it = agg.find(clean_key);
    if (it == agg.end()) continue;
    out.emplace(clean_key, stats.mean - it->second.mean);
  }
  return out;
}

void write_report_csv(const std::filesystem::path& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << "method,target,fraction,condition,seed,mape_percent,wall_ms\n";
  for (const auto& r : report.records) {
    out << method_name(r.method) << ',' << r.target << ',' << format_double(r.fraction)
        << ',' << condition_name(r.condition) << ',' << r.seed << ','
        << format_double(r.mape_percent) << ',' << r.wall_ms << '\n';
  }
}

ExperimentReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty report");
  ExperimentReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string method, target, fraction, condition, seed, mp, wall;
    if (!std::getline(ss, method, ',') || !std::getline(ss, target, ',') ||
        !std::getline(ss, fraction, ',') || !std::getline(ss, condition, ',') ||
        !std::getline(ss, seed, ',') || !std::getline(ss, mp, ',') ||
        !std::getline(ss, wall)) {
      throw std::runtime_error(path.string() + ": malformed line " +
                               std::to_string(lineno));
    }
    MapeRecord r;
    r.method = method_from_name(method);
    r.target = target;
    r.fraction = std::stod(fraction);
    r.condition = condition_from_name(condition);
    r.seed = std::stoull(seed);
    r.mape_percent = std::stod(mp);
    r.wall_ms = std::stoll(wall);
    report.records.push_back(std::move(r));
  }
  return report;
}

namespace {

std::string svg_color(Method m) {
  switch (m) {
    case Method::direct: return "#d62728";
    case Method::transfer: return "#1f77b4";
    case Method::edtl: return "#2ca02c";
    case Method::knn: return "#9467bd";
  }
  return "#000000";
}

}  // namespace

void write_report_charts(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto agg = report.aggregates();

  // Group cells per (target, condition).
  std::map<std::pair<std::string, Condition>,
           std::map<Method, std::vector<std::pair<double, double>>>>
      charts;
  for (const auto& [key, stats] : agg)
    charts[{key.target, key.condition}][key.method].push_back({key.fraction, stats.mean});

  for (const auto& [chart_key, series] : charts) {
    const auto& [target, condition] = chart_key;
    double max_mape = 0.0, min_frac = 1.0, max_frac = 0.0;
    for (const auto& [m, pts] : series)
      for (const auto& [f, v] : pts) {
        max_mape = std::max(max_mape, v);
        min_frac = std::min(min_frac, f);
        max_frac = std::max(max_frac, f);
      }
    if (max_mape <= 0.0) max_mape = 1.0;
    if (max_frac <= min_frac) max_frac = min_frac + 1.0;

    const double W = 640, H = 420, L = 70, R = 30, T = 50, B = 55;
    auto sx = [&](double f) { return L + (f - min_frac) / (max_frac - min_frac) * (W - L - R); };
    auto sy = [&](double v) { return H - B - v / (max_mape * 1.1) * (H - T - B); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
        << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << "MAPE vs training fraction - target " << target << " (" << condition_name(condition)
        << ")</text>\n";
    // axes
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\""
        << H - B << "\" stroke=\"black\"/>\n";
    // y ticks
    for (int i = 0; i <= 5; ++i) {
      const double v = max_mape * 1.1 * i / 5.0;
      const double yy = sy(v);
      svg << "<line x1=\"" << L - 4 << "\" y1=\"" << yy << "\" x2=\"" << L << "\" y2=\""
          << yy << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << L - 8 << "\" y=\"" << yy + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << std::round(v * 10.0) / 10.0 << "</text>\n";
    }
    // x ticks at observed fractions
    std::vector<double> fracs;
    for (const auto& [m, pts] : series)
      for (const auto& [f, v] : pts) fracs.push_back(f);
    std::sort(fracs.begin(), fracs.end());
    fracs.erase(std::unique(fracs.begin(), fracs.end()), fracs.end());
    for (const double f : fracs) {
      const double xx = sx(f);
      svg << "<line x1=\"" << xx << "\" y1=\"" << H - B << "\" x2=\"" << xx << "\" y2=\""
          << H - B + 4 << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << xx << "\" y=\"" << H - B + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << f
          << "</text>\n";
    }
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">training fraction</text>\n";
    svg << "<text x=\"18\" y=\"" << (T + H - B) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
        << (T + H - B) / 2 << ")\">MAPE (%)</text>\n";

    // polylines + legend
    double legend_y = T + 8;
    for (const auto& [method, pts_in] : series) {
      auto pts = pts_in;
      std::sort(pts.begin(), pts.end());
      std::ostringstream poly;
      for (const auto& [f, v] : pts) poly << sx(f) << ',' << sy(v) << ' ';
      svg << "<polyline fill=\"none\" stroke=\"" << svg_color(method)
          << "\" stroke-width=\"2\" points=\"" << poly.str() << "\"/>\n";
      for (const auto& [f, v] : pts)
        svg << "<circle cx=\"" << sx(f) << "\" cy=\"" << sy(v) << "\" r=\"3\" fill=\""
            << svg_color(method) << "\"/>\n";
      svg << "<rect x=\"" << W - R - 130 << "\" y=\"" << legend_y - 9
          << "\" width=\"12\" height=\"12\" fill=\"" << svg_color(method) << "\"/>\n";
      svg << "<text x=\"" << W - R - 112 << "\" y=\"" << legend_y + 2
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << method_name(method)
          << "</text>\n";
      legend_y += 18;
    }
    svg << "</svg>\n";

    const std::string fname = "mape_" + target + "_" + condition_name(condition) + ".svg";
    std::ofstream out(dir / fname);
    if (!out) throw std::runtime_error("cannot write chart: " + (dir / fname).string());
    out << svg.str();
  }
}

}  // namespace edtl
