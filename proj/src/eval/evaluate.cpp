#include "gfss/eval/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gfss/numcore/rng.hpp"

namespace gfss::eval {

void EvalConfig::validate() const {
  if (runs == 0) throw std::invalid_argument("run_count must be at least 1");
  if (workers == 0) throw std::invalid_argument("workers must be at least 1");
  adapt.validate();
}

std::size_t confusion_size(const fewshot::ClassSplit& split) {
  std::size_t m = 0;
  for (auto id : split.base_ids()) m = std::max<std::size_t>(m, id);
  for (auto id : split.novel_ids()) m = std::max<std::size_t>(m, id);
  return m + 1;
}

EvalResult evaluate(const num::StateDict& checkpoint, const models::ModelConfig& base_config,
                    const data::Dataset& pool, const fewshot::ClassSplit& split, const EvalConfig& config,
                    const EpisodeCallback& on_episode) {
  config.validate();
  EvalResult result;
  std::vector<RunMetrics> runs;
  std::mutex callback_mutex;

  for (std::size_t run = 0; run < config.runs; ++run) {
    const auto episodes =
        sample_episodes(pool, split, config.adapt.shots, num::derive_seed(config.seed, run), config.max_queries);
    if (episodes.empty()) throw std::invalid_argument("inference pool has no query with a novel-class pixel");
    result.episodes_per_run = episodes.size();

    const std::size_t workers = std::min(config.workers, episodes.size());
    std::vector<ConfusionMatrix> partial(workers, ConfusionMatrix(confusion_size(split)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&](std::size_t w) {
      try {
        for (std::size_t i = next++; i < episodes.size(); i = next++) {
          const Episode& e = episodes[i];
          const data::Sample& query = pool.samples[e.query_index];
          fewshot::EpisodeInput input{query.image_tensor(), support_set(pool, e, split), e.seed};
          auto out = fewshot::episode_protocol(checkpoint, base_config, split, input, config.adapt);
          LabelMap pred = out.labels;
          for (auto& id : pred.ids) id = split.id_of_channel(id);
          partial[w].accumulate(pred, query.mask);
          if (on_episode) {
            std::lock_guard lock(callback_mutex);
            on_episode(run, e, pred);
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = episodes.size();
      }
    };

    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
      for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ConfusionMatrix total(confusion_size(split));
    for (const auto& p : partial) total.merge(p);
    runs.push_back(run_metrics(total, split));
    result.run_confusions.push_back(std::move(total));
  }
  result.report = aggregate_runs(runs);
  return result;
}

}  // namespace gfss::eval
