#include "edtl/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace edtl {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key))
      throw std::runtime_error(where + ": unknown key '" + key + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
}

json schema_to_json(const FeatureSchema& s) {
  return json{{"features", s.names}, {"target", s.target_name}};
}

FeatureSchema schema_from_json(const json& j) {
  check_keys(j, "schema", {"features", "target"});
  FeatureSchema s;
  s.names = j.at("features").get<std::vector<std::string>>();
  s.target_name = j.at("target").get<std::string>();
  s.validate();
  return s;
}

json scaler_to_json(const ScalerParams& p) {
  return json{{"means", p.means},
              {"stdevs", p.stdevs},
              {"target_mean", p.target_mean},
              {"target_stdev", p.target_stdev}};
}

ScalerParams scaler_from_json(const json& j) {
  check_keys(j, "scaler", {"means", "stdevs", "target_mean", "target_stdev"});
  ScalerParams p;
  p.means = j.at("means").get<std::vector<double>>();
  p.stdevs = j.at("stdevs").get<std::vector<double>>();
  p.target_mean = j.at("target_mean").get<double>();
  p.target_stdev = j.at("target_stdev").get<double>();
  if (p.means.size() != p.stdevs.size())
    throw std::runtime_error("scaler: means/stdevs length mismatch");
  return p;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon_adam", c.epsilon_adam},
              {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j, "train", {"epochs", "batch_size", "learning_rate", "beta1", "beta2",
                          "epsilon_adam", "seed"});
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon_adam = j.value("epsilon_adam", c.epsilon_adam);
  c.seed = j.value("seed", c.seed);
  return c;
}

json network_to_json_obj(const NetworkParams& net) {
  json dims = json::array();
  dims.push_back(net.input_dim());
  for (const auto& l : net.layers) dims.push_back(l.out_dim());

  json activations = json::array();
  json weights = json::array();
  json biases = json::array();
  for (const auto& l : net.layers) {
    activations.push_back(l.activation == Activation::relu ? "relu" : "linear");
    weights.push_back(l.weights.data);  // row-major
    biases.push_back(l.bias);
  }
  return json{{"format", "edtl-network-v1"},
              {"dims", dims},
              {"activations", activations},
              {"weights", weights},
              {"biases", biases}};
}

NetworkParams network_from_json_obj(const json& j) {
  check_keys(j, "network", {"format", "dims", "activations", "weights", "biases"});
  const auto dims = j.at("dims").get<std::vector<std::size_t>>();
  if (dims.size() < 2) throw std::runtime_error("network: need at least 2 dims");
  const auto acts = j.at("activations").get<std::vector<std::string>>();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (acts.size() != dims.size() - 1 || weights.size() != acts.size() ||
      biases.size() != acts.size())
    throw std::runtime_error("network: inconsistent layer counts");

  NetworkParams net;
  for (std::size_t l = 0; l < acts.size(); ++l) {
    LayerParams layer;
    layer.activation = acts[l] == "relu" ? Activation::relu : Activation::linear;
    layer.weights = Matrix(dims[l + 1], dims[l]);
    layer.weights.data = weights[l].get<std::vector<double>>();
    if (layer.weights.data.size() != dims[l + 1] * dims[l])
      throw std::runtime_error("network: weight size mismatch at layer " +
                               std::to_string(l));
    layer.bias = biases[l].get<std::vector<double>>();
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

json svr_to_json(const SVRModel& m) {
  json points = json::array();
  for (std::size_t i = 0; i < m.support_points.rows; ++i) {
    const auto r = m.support_points.row(i);
    points.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return json{{"support_points", points},
              {"dual_coefs", m.dual_coefs},
              {"bias", m.bias},
              {"gamma", m.gamma},
              {"C", m.hyper.C},
              {"epsilon", m.hyper.epsilon},
              {"converged", m.converged},
              {"dim", m.support_points.cols}};
}

SVRModel svr_from_json(const json& j) {
  check_keys(j, "svr", {"support_points", "dual_coefs", "bias", "gamma", "C", "epsilon",
                        "converged", "dim"});
  SVRModel m;
  const auto& points = j.at("support_points");
  const std::size_t dim = j.at("dim").get<std::size_t>();
  m.support_points = Matrix(points.size(), dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto row = points[i].get<std::vector<double>>();
    if (row.size() != dim) throw std::runtime_error("svr: support point size mismatch");
    std::copy(row.begin(), row.end(), m.support_points.row(i).begin());
  }
  m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
  if (m.dual_coefs.size() != m.support_points.rows)
    throw std::runtime_error("svr: coefficient count mismatch");
  m.bias = j.at("bias").get<double>();
  m.gamma = j.at("gamma").get<double>();
  m.hyper.C = j.at("C").get<double>();
  m.hyper.epsilon = j.at("epsilon").get<double>();
  m.hyper.gamma = m.gamma;
  m.converged = j.at("converged").get<bool>();
  return m;
}

json spec_to_json(const BaseModelSpec& s) {
  return json{{"strategy", s.strategy == BaseModelSpec::Strategy::tune_all
                               ? "tune_all"
                               : "tune_hidden"},
              {"hidden_index", s.hidden_index},
              {"description", s.description}};
}

BaseModelSpec spec_from_json(const json& j) {
  check_keys(j, "spec", {"strategy", "hidden_index", "description"});
  BaseModelSpec s;
  const auto strategy = j.at("strategy").get<std::string>();
  if (strategy == "tune_all")
    s.strategy = BaseModelSpec::Strategy::tune_all;
  else if (strategy == "tune_hidden")
    s.strategy = BaseModelSpec::Strategy::tune_hidden;
  else
    throw std::runtime_error("spec: unknown strategy '" + strategy + "'");
  s.hidden_index = j.value("hidden_index", std::size_t{0});
  s.description = j.value("description", "");
  return s;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

json load_json_file(const std::filesystem::path& path) {
  return json::parse(read_file(path));
}

}  // namespace

std::string network_to_json(const NetworkParams& net) {
  return network_to_json_obj(net).dump(2);
}

NetworkParams network_from_json(const std::string& text) {
  return network_from_json_obj(json::parse(text));
}

void save_single_model(const std::filesystem::path& dir, const SingleNetModel& model,
                       const std::string& kind) {
  std::filesystem::create_directories(dir);
  json j{{"format", "edtl-model-v1"},
         {"kind", kind},
         {"network", network_to_json_obj(model.net)},
         {"schema", schema_to_json(model.schema)},
         {"scaler", scaler_to_json(model.scaler)}};
  write_file(dir / "model.json", j.dump(2));
}

SingleNetModel load_single_model(const std::filesystem::path& dir) {
  const json j = load_json_file(dir / "model.json");
  SingleNetModel m;
  m.net = network_from_json_obj(j.at("network"));
  m.schema = schema_from_json(j.at("schema"));
  m.scaler = scaler_from_json(j.at("scaler"));
  if (m.scaler.means.size() != m.schema.names.size() ||
      m.net.input_dim() != m.schema.names.size())
    throw std::runtime_error("model: schema/scaler/network dimensions disagree");
  return m;
}

void save_pretrained(const std::filesystem::path& dir, const PretrainedModel& model) {
  std::filesystem::create_directories(dir);
  json j{{"format", "edtl-model-v1"},
         {"kind", "pretrained"},
         {"network", network_to_json_obj(model.net)},
         {"schema", schema_to_json(model.source_schema)},
         {"scaler", scaler_to_json(model.scaler)},
         {"report", {{"train_mse", model.report.train_mse}, {"val_mse", model.report.val_mse}}}};
  write_file(dir / "model.json", j.dump(2));
}

PretrainedModel load_pretrained(const std::filesystem::path& dir) {
  const json j = load_json_file(dir / "model.json");
  if (j.value("kind", "") != "pretrained")
    throw std::runtime_error(dir.string() + ": not a pretrained model directory");
  PretrainedModel m;
  m.net = network_from_json_obj(j.at("network"));
  m.source_schema = schema_from_json(j.at("schema"));
  m.scaler = scaler_from_json(j.at("scaler"));
  if (j.contains("report")) {
    m.report.train_mse = j["report"].value("train_mse", 0.0);
    m.report.val_mse = j["report"].value("val_mse", 0.0);
  }
  return m;
}

void save_edtl(const std::filesystem::path& dir, const EDTLModel& model) {
  std::filesystem::create_directories(dir);
  json specs = json::array();
  for (const auto& s : model.bases.specs) specs.push_back(spec_to_json(s));
  json base_files = json::array();
  for (std::size_t k = 0; k < model.bases.models.size(); ++k) {
    const std::string fname = "base_" + std::to_string(k) + ".json";
    write_file(dir / fname, network_to_json_obj(model.bases.models[k]).dump(2));
    base_files.push_back(fname);
  }
  json j{{"format", "edtl-manifest-v1"},
         {"kind", "edtl"},
         {"target_schema", schema_to_json(model.bases.target_schema)},
         {"scaler", scaler_to_json(model.scaler)},
         {"stacking_mode",
          model.mode == StackingMode::in_sample ? "in_sample" : "out_of_fold"},
         {"folds", model.folds},
         {"specs", specs},
         {"svr", svr_to_json(model.meta)},
         {"base_files", base_files}};
  j["config_hash"] = fnv1a_hex(j.dump());
  write_file(dir / "manifest.json", j.dump(2));
}

EDTLModel load_edtl(const std::filesystem::path& dir) {
  const json j = load_json_file(dir / "manifest.json");
  if (j.value("kind", "") != "edtl")
    throw std::runtime_error(dir.string() + ": not an EDTL manifest directory");
  EDTLModel m;
  m.bases.target_schema = schema_from_json(j.at("target_schema"));
  m.scaler = scaler_from_json(j.at("scaler"));
  m.mode = j.at("stacking_mode").get<std::string>() == "in_sample"
               ? StackingMode::in_sample
               : StackingMode::out_of_fold;
  m.folds = j.value("folds", std::size_t{0});
  for (const auto& s : j.at("specs")) m.bases.specs.push_back(spec_from_json(s));
  m.meta = svr_from_json(j.at("svr"));
  for (const auto& f : j.at("base_files")) {
    m.bases.models.push_back(
        network_from_json_obj(load_json_file(dir / f.get<std::string>())));
  }
  if (m.bases.models.size() != m.bases.specs.size())
    throw std::runtime_error("edtl manifest: base/spec count mismatch");
  if (m.meta.support_points.rows > 0 &&
      m.meta.support_points.cols != m.bases.models.size())
    throw std::runtime_error("edtl manifest: meta input dimension mismatch");
  return m;
}

std::string model_dir_kind(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir / "manifest.json"))
    return load_json_file(dir / "manifest.json").value("kind", "");
  if (std::filesystem::exists(dir / "model.json"))
    return load_json_file(dir / "model.json").value("kind", "");
  throw std::runtime_error(dir.string() + ": no model.json or manifest.json found");
}

namespace {

ExperimentConfig config_from_json_obj(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, "config",
             {"data", "targets", "fractions", "methods", "anomaly", "seeds",
              "test_fraction", "train", "network", "svr", "knn_k", "edtl", "workers",
              "record_timing"});

  if (j.contains("data")) {
    const auto& d = j["data"];
    check_keys(d, "data",
               {"mode", "source_profile", "target_profile", "n_source", "n_target", "dt",
                "duration", "source_csv", "target_csv", "target_column"});
    const std::string mode = d.value("mode", "simulate");
    if (mode == "simulate")
      cfg.simulate = true;
    else if (mode == "csv")
      cfg.simulate = false;
    else
      throw std::runtime_error("config data.mode must be 'simulate' or 'csv'");
    cfg.source_profile = d.value("source_profile", cfg.source_profile);
    cfg.target_profile = d.value("target_profile", cfg.target_profile);
    cfg.n_source = d.value("n_source", cfg.n_source);
    cfg.n_target = d.value("n_target", cfg.n_target);
    cfg.sim_dt = d.value("dt", cfg.sim_dt);
    cfg.sim_duration = d.value("duration", cfg.sim_duration);
    cfg.source_csv = d.value("source_csv", cfg.source_csv);
    cfg.target_csv = d.value("target_csv", cfg.target_csv);
    cfg.target_column = d.value("target_column", cfg.target_column);
  }
  if (j.contains("targets")) {
    cfg.targets.clear();
    for (const auto& t : j["targets"])
      cfg.targets.push_back(target_from_name(t.get<std::string>()));
  }
  if (j.contains("fractions")) cfg.fractions = j["fractions"].get<std::vector<double>>();
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j["methods"])
      cfg.methods.push_back(method_from_name(m.get<std::string>()));
  }
  if (j.contains("anomaly") && !j["anomaly"].is_null()) {
    const auto& a = j["anomaly"];
    check_keys(a, "anomaly", {"row_fraction", "sigma_ratio"});
    AnomalySpec spec;
    spec.row_fraction = a.value("row_fraction", spec.row_fraction);
    spec.sigma_ratio = a.value("sigma_ratio", spec.sigma_ratio);
    cfg.anomaly = spec;
  }
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
  if (j.contains("train")) cfg.settings.train = train_config_from_json(j["train"]);
  if (j.contains("network")) {
    check_keys(j["network"], "network", {"hidden_dims"});
    cfg.settings.hidden_dims =
        j["network"].value("hidden_dims", cfg.settings.hidden_dims);
  }
  if (j.contains("svr")) {
    const auto& s = j["svr"];
    check_keys(s, "svr", {"C", "epsilon", "gamma"});
    cfg.settings.svr.C = s.value("C", cfg.settings.svr.C);
    cfg.settings.svr.epsilon = s.value("epsilon", cfg.settings.svr.epsilon);
    cfg.settings.svr.gamma = s.value("gamma", cfg.settings.svr.gamma);
  }
  cfg.settings.knn_k = j.value("knn_k", cfg.settings.knn_k);
  if (j.contains("edtl")) {
    const auto& e = j["edtl"];
    check_keys(e, "edtl",
               {"stacking", "folds", "output_trainable", "reuse_source_scaler",
                "parallel_bases"});
    const std::string stacking = e.value("stacking", "in_sample");
    if (stacking == "in_sample")
      cfg.settings.edtl.mode = StackingMode::in_sample;
    else if (stacking == "out_of_fold")
      cfg.settings.edtl.mode = StackingMode::out_of_fold;
    else
      throw std::runtime_error("config edtl.stacking must be in_sample or out_of_fold");
    cfg.settings.edtl.folds = e.value("folds", cfg.settings.edtl.folds);
    cfg.settings.edtl.output_trainable =
        e.value("output_trainable", cfg.settings.edtl.output_trainable);
    cfg.settings.edtl.reuse_source_scaler =
        e.value("reuse_source_scaler", cfg.settings.edtl.reuse_source_scaler);
    cfg.settings.edtl.parallel_bases =
        e.value("parallel_bases", cfg.settings.edtl.parallel_bases);
  }
  cfg.workers = j.value("workers", cfg.workers);
  cfg.record_timing = j.value("record_timing", cfg.record_timing);
  return cfg;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  return config_from_json_obj(json::parse(text));
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json targets = json::array();
  for (const TargetKind t : cfg.targets) targets.push_back(target_name(t));
  json methods = json::array();
  for (const Method m : cfg.methods) methods.push_back(method_name(m));

  json j{{"data",
          {{"mode", cfg.simulate ? "simulate" : "csv"},
           {"source_profile", cfg.source_profile},
           {"target_profile", cfg.target_profile},
           {"n_source", cfg.n_source},
           {"n_target", cfg.n_target},
           {"dt", cfg.sim_dt},
           {"duration", cfg.sim_duration},
           {"source_csv", cfg.source_csv},
           {"target_csv", cfg.target_csv},
           {"target_column", cfg.target_column}}},
         {"targets", targets},
         {"fractions", cfg.fractions},
         {"methods", methods},
         {"seeds", cfg.seeds},
         {"test_fraction", cfg.test_fraction},
         {"train", train_config_to_json(cfg.settings.train)},
         {"network", {{"hidden_dims", cfg.settings.hidden_dims}}},
         {"svr",
          {{"C", cfg.settings.svr.C},
           {"epsilon", cfg.settings.svr.epsilon},
           {"gamma", cfg.settings.svr.gamma}}},
         {"knn_k", cfg.settings.knn_k},
         {"edtl",
          {{"stacking", cfg.settings.edtl.mode == StackingMode::in_sample
                            ? "in_sample"
                            : "out_of_fold"},
           {"folds", cfg.settings.edtl.folds},
           {"output_trainable", cfg.settings.edtl.output_trainable},
           {"reuse_source_scaler", cfg.settings.edtl.reuse_source_scaler},
           {"parallel_bases", cfg.settings.edtl.parallel_bases}}},
         {"workers", cfg.workers},
         {"record_timing", cfg.record_timing}};
  if (cfg.anomaly) {
    j["anomaly"] = {{"row_fraction", cfg.anomaly->row_fraction},
                    {"sigma_ratio", cfg.anomaly->sigma_ratio}};
  }
  return j.dump(2);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_file(path));
}

}  // namespace edtl
