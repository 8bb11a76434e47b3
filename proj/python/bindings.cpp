#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "edtl/harness.hpp"
#include "edtl/serialize.hpp"
#include "edtl/simulator.hpp"

namespace py = pybind11;
using namespace edtl;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
  return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> arr({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
  return arr;
}

std::vector<double> vector_from_numpy(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return std::vector<double>(arr.data(), arr.data() + arr.size());
}

Dataset dataset_from_parts(const std::vector<std::string>& names,
                           const std::string& target_name,
                           const py::array_t<double, py::array::c_style | py::array::forcecast>& X,
                           const py::array_t<double, py::array::c_style | py::array::forcecast>& y) {
  Dataset ds;
  ds.schema.names = names;
  ds.schema.target_name = target_name;
  ds.rows = matrix_from_numpy(X);
  ds.targets = vector_from_numpy(y);
  ds.validate();
  return ds;
}

}  // namespace

PYBIND11_MODULE(_edtl, m) {
  m.doc() = "Ensemble deep transfer learning core (C++)";

  py::class_<FeatureSchema>(m, "FeatureSchema")
      .def(py::init<>())
      .def_readwrite("names", &FeatureSchema::names)
      .def_readwrite("target_name", &FeatureSchema::target_name)
      .def("__repr__", [](const FeatureSchema& s) {
        return "FeatureSchema(" + std::to_string(s.names.size()) + " features -> " +
               s.target_name + ")";
      });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&dataset_from_parts), py::arg("names"), py::arg("target_name"),
           py::arg("X"), py::arg("y"))
      .def_property_readonly("schema", [](const Dataset& d) { return d.schema; })
      .def_property_readonly("X", [](const Dataset& d) { return matrix_to_numpy(d.rows); })
      .def_property_readonly("y",
                             [](const Dataset& d) {
                               return py::array_t<double>(
                                   static_cast<py::ssize_t>(d.targets.size()),
                                   d.targets.data());
                             })
      .def("__len__", &Dataset::n_rows)
      .def("__repr__", [](const Dataset& d) {
        return "Dataset(" + std::to_string(d.n_rows()) + " rows x " +
               std::to_string(d.n_features()) + " features -> " + d.schema.target_name +
               ")";
      });

  py::class_<ScalerParams>(m, "ScalerParams")
      .def_readonly("means", &ScalerParams::means)
      .def_readonly("stdevs", &ScalerParams::stdevs)
      .def_readonly("target_mean", &ScalerParams::target_mean)
      .def_readonly("target_stdev", &ScalerParams::target_stdev);

  py::class_<AnomalySpec>(m, "AnomalySpec")
      .def(py::init<>())
      .def_readwrite("row_fraction", &AnomalySpec::row_fraction)
      .def_readwrite("sigma_ratio", &AnomalySpec::sigma_ratio)
      .def_readwrite("seed", &AnomalySpec::seed);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("epsilon_adam", &TrainConfig::epsilon_adam)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<SVRHyperParams>(m, "SVRHyperParams")
      .def(py::init<>())
      .def_readwrite("C", &SVRHyperParams::C)
      .def_readwrite("epsilon", &SVRHyperParams::epsilon)
      .def_readwrite("gamma", &SVRHyperParams::gamma);

  py::class_<SVRModel>(m, "SVRModel")
      .def_property_readonly("support_points",
                             [](const SVRModel& s) { return matrix_to_numpy(s.support_points); })
      .def_readonly("dual_coefs", &SVRModel::dual_coefs)
      .def_readonly("bias", &SVRModel::bias)
      .def_readonly("gamma", &SVRModel::gamma)
      .def_readonly("converged", &SVRModel::converged);

  py::class_<NetworkParams>(m, "NetworkParams")
      .def_property_readonly("input_dim", &NetworkParams::input_dim)
      .def_property_readonly("layer_count", &NetworkParams::layer_count);

  py::class_<PretrainedModel>(m, "PretrainedModel")
      .def_readonly("net", &PretrainedModel::net)
      .def_property_readonly("val_mse",
                             [](const PretrainedModel& p) { return p.report.val_mse; })
      .def_property_readonly("train_mse",
                             [](const PretrainedModel& p) { return p.report.train_mse; });

  py::class_<EDTLOptions>(m, "EDTLOptions")
      .def(py::init<>())
      .def_readwrite("folds", &EDTLOptions::folds)
      .def_readwrite("output_trainable", &EDTLOptions::output_trainable)
      .def_readwrite("reuse_source_scaler", &EDTLOptions::reuse_source_scaler)
      .def_readwrite("parallel_bases", &EDTLOptions::parallel_bases);

  py::class_<EDTLModel>(m, "EDTLModel")
      .def_property_readonly("base_count",
                             [](const EDTLModel& e) { return e.bases.count(); })
      .def_property_readonly("meta", [](const EDTLModel& e) { return e.meta; })
      .def_property_readonly("converged",
                             [](const EDTLModel& e) { return e.meta.converged; });

  // dataset ops
  m.def("load_csv",
        [](const std::string& path, const std::string& target) {
          return load_csv(path, target);
        },
        py::arg("path"), py::arg("target_column"));
  m.def("write_csv",
        [](const std::string& path, const Dataset& ds) { write_csv(path, ds); },
        py::arg("path"), py::arg("dataset"));
  m.def("fit_standardize", &fit_standardize, py::arg("dataset"));
  m.def("apply_scaler", &apply_scaler, py::arg("dataset"), py::arg("scaler"));
  m.def("invert_scaler", &invert_scaler, py::arg("dataset"), py::arg("scaler"));
  m.def("split", &split, py::arg("dataset"), py::arg("train_fraction"), py::arg("seed"));
  m.def("subsample_fraction", &subsample_fraction, py::arg("dataset"), py::arg("fraction"),
        py::arg("seed"));
  m.def("inject_anomalies", &inject_anomalies, py::arg("dataset"), py::arg("spec"));
  m.def("select_features", &select_features, py::arg("dataset"), py::arg("k"));
  m.def("select_columns", &select_columns, py::arg("dataset"), py::arg("schema"));

  // nn / transfer / ensemble
  m.def("pretrain", &pretrain, py::arg("source"), py::arg("config"),
        py::arg("hidden_dims") = std::vector<std::size_t>{64, 64, 64, 64});
  m.def("train_edtl", &train_edtl, py::arg("pretrained"), py::arg("target_train"),
        py::arg("config"), py::arg("svr") = SVRHyperParams{},
        py::arg("options") = EDTLOptions{});
  m.def("predict_edtl",
        [](const EDTLModel& model,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& X) {
          if (X.ndim() == 1) {
            const auto x = vector_from_numpy(X);
            return py::cast(predict_edtl(model, x));
          }
          return py::cast(predict_edtl_batch(model, matrix_from_numpy(X)));
        },
        py::arg("model"), py::arg("X"));

  // svr
  m.def("rbf_kernel",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
           double gamma) {
          return rbf_kernel(vector_from_numpy(a), vector_from_numpy(b), gamma);
        },
        py::arg("z"), py::arg("z2"), py::arg("gamma"));
  m.def("median_gamma",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& Z) {
          return median_gamma(matrix_from_numpy(Z));
        },
        py::arg("Z"));
  m.def("fit_svr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& Z,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
           const SVRHyperParams& hp, double tol, std::size_t max_passes) {
          return fit_svr(matrix_from_numpy(Z), vector_from_numpy(y), hp, tol, max_passes);
        },
        py::arg("Z"), py::arg("y"), py::arg("hp") = SVRHyperParams{},
        py::arg("tol") = 1e-3, py::arg("max_passes") = 0);
  m.def("predict_svr",
        [](const SVRModel& model,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& z) {
          return predict_svr(model, vector_from_numpy(z));
        },
        py::arg("model"), py::arg("z"));

  // simulator
  m.def("drying_constant", &drying_constant, py::arg("air_temp_kelvin"));
  m.def("simulate_pair",
        [](const std::string& source_profile, const std::string& target_profile,
           std::size_t n_source, std::size_t n_target, std::uint64_t seed,
           const std::string& target, double dt, double duration) {
          return make_domain_pair(profile_by_name(source_profile),
                                  profile_by_name(target_profile), n_source, n_target,
                                  seed, target_from_name(target), dt, duration);
        },
        py::arg("source_profile") = "alpha", py::arg("target_profile") = "beta",
        py::arg("n_source") = 20000, py::arg("n_target") = 2000, py::arg("seed") = 1,
        py::arg("target") = "E", py::arg("dt") = 0.1, py::arg("duration") = 600.0);

  // harness
  m.def("mape",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& yhat) {
          const auto r = mape(vector_from_numpy(y), vector_from_numpy(yhat));
          return py::make_tuple(r.percent, r.excluded);
        },
        py::arg("y"), py::arg("yhat"));
  m.def("knn_predict",
        [](const Dataset& train,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           std::size_t k) { return knn_predict(train, vector_from_numpy(x), k); },
        py::arg("train"), py::arg("x"), py::arg("k"));

  // model io
  m.def("save_edtl",
        [](const std::string& dir, const EDTLModel& model) { save_edtl(dir, model); },
        py::arg("dir"), py::arg("model"));
  m.def("load_edtl", [](const std::string& dir) { return load_edtl(dir); }, py::arg("dir"));
}
