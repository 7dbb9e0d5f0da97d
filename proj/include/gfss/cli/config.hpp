#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gfss/data/split.hpp"
#include "gfss/data/synth.hpp"
#include "gfss/eval/evaluate.hpp"
#include "gfss/fewshot/base_train.hpp"
#include "gfss/fewshot/pretrain.hpp"
#include "gfss/models/seg_model.hpp"

namespace gfss::cli {

/// Raised for anything wrong with the configuration or command line (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::filesystem::path dataset_path;  // empty = generate from `synth`
  data::SynthConfig synth;
  std::size_t split_index = 0;
  std::size_t fold_size = 5;
  data::SplitConfig split;
  models::ModelConfig model;  // class_count is derived from the split
  std::uint64_t model_seed = 3;
  bool pretrain_enabled = true;
  fewshot::PretrainConfig pretrain;
  fewshot::BaseTrainConfig base_train;
  eval::EvalConfig eval;  // eval.adapt holds the adaptation settings
  std::filesystem::path output_dir = "out";

  fewshot::ClassSplit class_split() const;
  /// Model config for base training (1 + |Cb| classes).
  models::ModelConfig base_model() const;
  /// Throws ConfigError. Paths are resolved relative to the working directory.
  void validate() const;
};

/// Parses an INI file. Unknown sections or keys are errors. Relative paths in
/// the file are resolved against the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
/// Default configuration rendered as INI text.
std::string default_config_text();

}  // namespace gfss::cli
