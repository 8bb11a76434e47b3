#pragma once

#include <filesystem>
#include <string>

#include "edtl/ensemble.hpp"
#include "edtl/harness.hpp"

namespace edtl {

// JSON text round-trips are bit-exact: doubles are emitted with the shortest
// decimal encoding that parses back to the same value.

std::string network_to_json(const NetworkParams& net);
NetworkParams network_from_json(const std::string& text);

// Single-network model directory (direct / transfer): model.json
void save_single_model(const std::filesystem::path& dir, const SingleNetModel& model,
                       const std::string& kind);
SingleNetModel load_single_model(const std::filesystem::path& dir);

// Pretrained source model directory: model.json with schema+scaler+report.
void save_pretrained(const std::filesystem::path& dir, const PretrainedModel& model);
PretrainedModel load_pretrained(const std::filesystem::path& dir);

// EDTL manifest directory: manifest.json plus base_<k>.json network files.
void save_edtl(const std::filesystem::path& dir, const EDTLModel& model);
EDTLModel load_edtl(const std::filesystem::path& dir);

// Kind marker stored inside <dir>/model.json or manifest.json:
// "direct", "transfer", "pretrained" or "edtl".
std::string model_dir_kind(const std::filesystem::path& dir);

// Experiment configuration from a JSON config file; unknown keys are errors.
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace edtl
