#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gfss/eval/episodes.hpp"
#include "gfss/eval/metrics.hpp"
#include "gfss/fewshot/adapt.hpp"

namespace gfss::eval {

struct EvalConfig {
  std::size_t runs = 5;
  std::size_t max_queries = 0;  // per run; 0 = every suitable query
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  fewshot::AdaptConfig adapt;

  void validate() const;
};

struct EvalResult {
  MetricsReport report;
  std::vector<ConfusionMatrix> run_confusions;
  std::size_t episodes_per_run = 0;
};

/// Called once per episode with predictions mapped back to class ids. May be
/// invoked from worker threads, but never concurrently.
using EpisodeCallback = std::function<void(std::size_t run, const Episode&, const LabelMap& predicted)>;

/// Confusion matrix size covering every id of the split.
std::size_t confusion_size(const fewshot::ClassSplit& split);

/// Runs `config.runs` independent runs; each run draws its own supports from
/// derive_seed(seed, run). Results do not depend on the worker count.
EvalResult evaluate(const num::StateDict& checkpoint, const models::ModelConfig& base_config,
                    const data::Dataset& pool, const fewshot::ClassSplit& split, const EvalConfig& config,
                    const EpisodeCallback& on_episode = {});

}  // namespace gfss::eval
