#pragma once

#include "handkin/eval/experiment.hpp"

#include <filesystem>
#include <string>

namespace handkin {

// TOML configuration files. Unknown keys are rejected so typos surface early.
//
// Synthetic session: top-level keys or a [synth] table with SynthConfig fields.
// Model/training: [model] and [train] tables.
// Experiment: [experiment], [split], [geometry], [inverse], [model], [train]
// and one or more [[session]] entries (path/format or an inline synth table).

SynthConfig parse_synth_config(const std::string& toml_text);
SynthConfig load_synth_config(const std::filesystem::path& path);

struct ModelTrainConfig {
  nn::DecoderConfig model;
  nn::TrainConfig train;
};

ModelTrainConfig parse_model_train_config(const std::string& toml_text);
ModelTrainConfig load_model_train_config(const std::filesystem::path& path);

// Relative paths in the file are resolved against base_dir.
eval::ExperimentConfig parse_experiment_config(const std::string& toml_text, const std::filesystem::path& base_dir);
eval::ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace handkin
