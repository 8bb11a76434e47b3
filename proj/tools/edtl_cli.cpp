#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edtl/harness.hpp"
#include "edtl/serialize.hpp"
#include "edtl/simulator.hpp"

namespace {

using nlohmann::json;

json profile_manifest(const edtl::LineProfile& p) {
  const auto& r = p.response;
  json ranges = json::object();
  for (const auto& f : p.feature_names) {
    const auto [lo, hi] = p.range_of(f);
    ranges[f] = {lo, hi};
  }
  return json{
      {"name", p.name},
      {"features", p.feature_names},
      {"ranges", ranges},
      {"fabric_type", p.fabric_type == edtl::FabricType::nylon ? "nylon" : "polyester"},
      {"noise_level", p.noise_level},
      {"response",
       {{"me_base", r.me_base},        {"e_base", r.e_base},
        {"e_temp_quad", r.e_temp_quad},{"e_temp_lin", r.e_temp_lin},
        {"e_fan", r.e_fan},            {"e_temp_fan", r.e_temp_fan},
        {"e_speed", r.e_speed},        {"e_exhaust", r.e_exhaust},
        {"e_evap", r.e_evap},          {"w_base", r.w_base},
        {"w_speed", r.w_speed},        {"w_moist", r.w_moist},
        {"w_temp", r.w_temp},          {"d_base", r.d_base},
        {"d_speed", r.d_speed},        {"d_temp", r.d_temp},
        {"d_moist", r.d_moist}}},
      {"shift",
       {{"E", {p.shift_e.scale, p.shift_e.offset}},
        {"M", {p.shift_m.scale, p.shift_m.offset}},
        {"W", {p.shift_w.scale, p.shift_w.offset}},
        {"D", {p.shift_d.scale, p.shift_d.offset}}}}};
}

// Streams an input CSV through a prediction function, appending a
// `prediction` column while preserving the original cells.
void predict_csv(const std::filesystem::path& in_path,
                 const std::filesystem::path& out_path,
                 const edtl::FeatureSchema& schema,
                 const std::function<double(std::span<const double>)>& predict) {
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot open file: " + in_path.string());
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write file: " + out_path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(in_path.string() + ": empty file");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();

  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::size_t> feature_cols;
  for (const auto& name : schema.names) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error(in_path.string() + ": missing feature column '" + name + "'");
    feature_cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  out << line << ",prediction\n";
  std::vector<double> x(schema.names.size());
  std::size_t rowno = 0;
  while (std::getline(in, line)) {
    ++rowno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    {
      std::istringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.push_back("");
    }
    if (cells.size() != header.size())
      throw std::runtime_error(in_path.string() + ": row " + std::to_string(rowno) +
                               " has wrong cell count");
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      char* end = nullptr;
      const std::string& cell = cells[feature_cols[c]];
      x[c] = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw std::runtime_error(in_path.string() + ": row " + std::to_string(rowno) +
                                 ", column '" + schema.names[c] + "': bad value '" +
                                 cell + "'");
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), predict(x));
    out << line << ',' << std::string_view(buf, res.ptr) << '\n';
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble deep transfer learning for production-line regression"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Generate a source/target domain pair as CSV");
  std::string sim_out, sim_source_profile = "alpha", sim_target_profile = "beta";
  std::string sim_target = "E";
  std::size_t sim_n_source = 20000, sim_n_target = 2000;
  std::uint64_t sim_seed = 1;
  double sim_dt = 0.1, sim_duration = 600.0;
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--source-profile", sim_source_profile, "Source line profile name");
  sim->add_option("--target-profile", sim_target_profile, "Target line profile name");
  sim->add_option("--target", sim_target, "Target column: E, M, W or D");
  sim->add_option("--n-source", sim_n_source, "Source rows");
  sim->add_option("--n-target", sim_n_target, "Target rows");
  sim->add_option("--seed", sim_seed, "Generation seed");
  sim->add_option("--dt", sim_dt, "Euler step (s)");
  sim->add_option("--duration", sim_duration, "Pass duration at reference speed (s)");

  // ---- pretrain ----
  auto* pre = app.add_subcommand("pretrain", "Train a source-domain model");
  std::string pre_source, pre_target_col = "E", pre_out, pre_config;
  std::uint64_t pre_seed = 1;
  pre->add_option("--source", pre_source, "Source CSV")->required();
  pre->add_option("--target-col", pre_target_col, "Target column name");
  pre->add_option("--out", pre_out, "Output model directory")->required();
  pre->add_option("--config", pre_config, "Experiment config JSON");
  pre->add_option("--seed", pre_seed, "Training seed");

  // ---- train ----
  auto* trn = app.add_subcommand("train", "Train a target-domain model");
  std::string trn_method = "edtl", trn_train, trn_target_col = "E", trn_out, trn_pre,
              trn_config;
  std::uint64_t trn_seed = 1;
  trn->add_option("--method", trn_method, "direct, transfer or edtl");
  trn->add_option("--train", trn_train, "Target-domain training CSV")->required();
  trn->add_option("--target-col", trn_target_col, "Target column name");
  trn->add_option("--out", trn_out, "Output model directory")->required();
  trn->add_option("--pretrained", trn_pre, "Pretrained model directory (transfer/edtl)");
  trn->add_option("--config", trn_config, "Experiment config JSON");
  trn->add_option("--seed", trn_seed, "Training seed");

  // ---- predict ----
  auto* prd = app.add_subcommand("predict", "Predict a CSV with a saved model");
  std::string prd_model, prd_in, prd_out;
  prd->add_option("--model", prd_model, "Model directory")->required();
  prd->add_option("--input", prd_in, "Input CSV")->required();
  prd->add_option("--out", prd_out, "Output CSV")->required();

  // ---- sweep ----
  auto* swp = app.add_subcommand("sweep", "Run a method/fraction/seed experiment sweep");
  std::string swp_config, swp_out;
  std::string swp_methods, swp_targets, swp_fractions, swp_seeds;
  std::size_t swp_workers = 0;
  bool swp_no_timing = false;
  bool swp_anomaly = false;
  swp->add_option("--config", swp_config, "Experiment config JSON");
  swp->add_option("--out", swp_out, "Report directory")->required();
  swp->add_option("--methods", swp_methods, "Comma list: direct,transfer,edtl,knn");
  swp->add_option("--targets", swp_targets, "Comma list of E,M,W,D");
  swp->add_option("--fractions", swp_fractions, "Comma list of training fractions");
  swp->add_option("--seeds", swp_seeds, "Comma list of seeds");
  swp->add_option("--workers", swp_workers, "Worker threads (0 = hardware)");
  swp->add_flag("--no-timing", swp_no_timing, "Write wall_ms as 0 for byte-stable output");
  swp->add_flag("--anomaly", swp_anomaly, "Also run the anomalous-training condition");

  // ---- report ----
  auto* rep = app.add_subcommand("report", "Render SVG charts from a report CSV");
  std::string rep_in, rep_out;
  rep->add_option("--in", rep_in, "Report CSV")->required();
  rep->add_option("--out", rep_out, "Chart output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto kind = edtl::target_from_name(sim_target);
      const auto source_profile = edtl::profile_by_name(sim_source_profile);
      const auto target_profile = edtl::profile_by_name(sim_target_profile);
      const auto [source, target] =
          edtl::make_domain_pair(source_profile, target_profile, sim_n_source,
                                 sim_n_target, sim_seed, kind, sim_dt, sim_duration);
      std::filesystem::create_directories(sim_out);
      edtl::write_csv(std::filesystem::path(sim_out) / "source.csv", source);
      edtl::write_csv(std::filesystem::path(sim_out) / "target.csv", target);
      // True generator coefficients, for debugging only; learners never read this.
      json manifest{{"seed", sim_seed},
                    {"target", sim_target},
                    {"dt", sim_dt},
                    {"duration", sim_duration},
                    {"source", profile_manifest(source_profile)},
                    {"target_line", profile_manifest(target_profile)}};
      std::ofstream mf(std::filesystem::path(sim_out) / "generator_manifest.json");
      mf << manifest.dump(2) << '\n';
      std::cout << "wrote " << source.n_rows() << " source rows, " << target.n_rows()
                << " target rows to " << sim_out << '\n';
      return 0;
    }

    if (pre->parsed()) {
      edtl::ExperimentConfig cfg;
      if (!pre_config.empty()) cfg = edtl::load_experiment_config(pre_config);
      const auto source = edtl::load_csv(pre_source, pre_target_col);
      edtl::TrainConfig tc = cfg.settings.train;
      tc.seed = pre_seed;
      const auto model = edtl::pretrain(source, tc, cfg.settings.hidden_dims);
      edtl::save_pretrained(pre_out, model);
      std::cout << "pretrained on " << source.n_rows()
                << " rows; train mse=" << model.report.train_mse
                << " val mse=" << model.report.val_mse << " -> " << pre_out << '\n';
      return 0;
    }

    if (trn->parsed()) {
      edtl::ExperimentConfig cfg;
      if (!trn_config.empty()) cfg = edtl::load_experiment_config(trn_config);
      const auto method = edtl::method_from_name(trn_method);
      const auto train_ds = edtl::load_csv(trn_train, trn_target_col);

      if (method == edtl::Method::direct) {
        auto [train_std, scaler] = edtl::fit_standardize(train_ds);
        std::vector<std::size_t> dims;
        dims.push_back(train_std.n_features());
        dims.insert(dims.end(), cfg.settings.hidden_dims.begin(),
                    cfg.settings.hidden_dims.end());
        dims.push_back(1);
        auto net = edtl::init_network(dims, edtl::derive_seed(trn_seed, "direct-init"));
        edtl::TrainConfig tc = cfg.settings.train;
        tc.seed = edtl::derive_seed(trn_seed, "direct-train");
        net = edtl::train(net, train_std, tc);
        edtl::save_single_model(trn_out, {std::move(net), train_ds.schema, scaler},
                                "direct");
      } else if (method == edtl::Method::transfer || method == edtl::Method::edtl) {
        if (trn_pre.empty())
          throw std::runtime_error("--pretrained is required for transfer/edtl");
        const auto pre_model = edtl::load_pretrained(trn_pre);
        if (method == edtl::Method::transfer) {
          auto [train_std, scaler] = edtl::fit_standardize(train_ds);
          auto adapted = edtl::adapt_input(pre_model, train_ds.schema,
                                           edtl::derive_seed(trn_seed, "transfer-adapt"));
          edtl::BaseModelSpec all;
          all.strategy = edtl::BaseModelSpec::Strategy::tune_all;
          all.description = "tune_all";
          edtl::TrainConfig tc = cfg.settings.train;
          tc.seed = edtl::derive_seed(trn_seed, "transfer-train");
          auto net = edtl::fine_tune(adapted, all, train_std, tc);
          edtl::save_single_model(trn_out, {std::move(net), train_ds.schema, scaler},
                                  "transfer");
        } else {
          edtl::TrainConfig tc = cfg.settings.train;
          tc.seed = edtl::derive_seed(trn_seed, "edtl-train");
          const auto model =
              edtl::train_edtl(pre_model, train_ds, tc, cfg.settings.svr, cfg.settings.edtl);
          edtl::save_edtl(trn_out, model);
          if (!model.meta.converged)
            std::cerr << "warning: SVR meta-regressor hit the pass limit before tolerance\n";
        }
      } else {
        throw std::runtime_error("train supports methods direct, transfer and edtl");
      }
      std::cout << "trained " << trn_method << " model on " << train_ds.n_rows()
                << " rows -> " << trn_out << '\n';
      return 0;
    }

    if (prd->parsed()) {
      const std::string kind = edtl::model_dir_kind(prd_model);
      if (kind == "edtl") {
        const auto model = edtl::load_edtl(prd_model);
        predict_csv(prd_in, prd_out, model.bases.target_schema,
                    [&](std::span<const double> x) { return edtl::predict_edtl(model, x); });
      } else if (kind == "direct" || kind == "transfer" || kind == "pretrained") {
        edtl::SingleNetModel model;
        if (kind == "pretrained") {
          const auto p = edtl::load_pretrained(prd_model);
          model = {p.net, p.source_schema, p.scaler};
        } else {
          model = edtl::load_single_model(prd_model);
        }
        predict_csv(prd_in, prd_out, model.schema,
                    [&](std::span<const double> x) { return edtl::predict_single(model, x); });
      } else {
        throw std::runtime_error("unknown model kind '" + kind + "'");
      }
      std::cout << "predictions written to " << prd_out << '\n';
      return 0;
    }

    if (swp->parsed()) {
      edtl::ExperimentConfig cfg;
      if (!swp_config.empty()) cfg = edtl::load_experiment_config(swp_config);
      if (!swp_methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : split_list(swp_methods))
          cfg.methods.push_back(edtl::method_from_name(m));
      }
      if (!swp_targets.empty()) {
        cfg.targets.clear();
        for (const auto& t : split_list(swp_targets))
          cfg.targets.push_back(edtl::target_from_name(t));
      }
      if (!swp_fractions.empty()) {
        cfg.fractions.clear();
        for (const auto& f : split_list(swp_fractions)) cfg.fractions.push_back(std::stod(f));
      }
      if (!swp_seeds.empty()) {
        cfg.seeds.clear();
        for (const auto& s : split_list(swp_seeds)) cfg.seeds.push_back(std::stoull(s));
      }
      if (swp_workers > 0) cfg.workers = swp_workers;
      if (swp_no_timing) cfg.record_timing = false;
      if (swp_anomaly && !cfg.anomaly) cfg.anomaly = edtl::AnomalySpec{};

      const auto report = edtl::run_sweep(cfg);
      std::filesystem::create_directories(swp_out);
      const auto out_dir = std::filesystem::path(swp_out);
      edtl::write_report_csv(out_dir / "report.csv", report);
      edtl::write_report_charts(report, out_dir);
      {
        std::ofstream cf(out_dir / "sweep_config.json");
        cf << edtl::experiment_config_to_json(cfg) << '\n';
      }
      if (!report.failures.empty()) {
        std::ofstream ff(out_dir / "failures.txt");
        for (const auto& f : report.failures) ff << f << '\n';
        std::cerr << report.failures.size() << " legs failed; see failures.txt\n";
      }
      std::cout << report.records.size() << " records -> " << (out_dir / "report.csv")
                << '\n';
      return report.failures.empty() ? 0 : 2;
    }

    if (rep->parsed()) {
      const auto report = edtl::read_report_csv(rep_in);
      edtl::write_report_charts(report, rep_out);
      std::cout << "charts written to " << rep_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
