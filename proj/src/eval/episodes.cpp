#include "gfss/eval/episodes.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "gfss/data/split.hpp"
#include "gfss/numcore/rng.hpp"

namespace gfss::eval {

namespace {

bool contains(const data::Sample& s, std::uint8_t id) {
  return std::find(s.mask.ids.begin(), s.mask.ids.end(), id) != s.mask.ids.end();
}

}  // namespace

std::vector<Episode> sample_episodes(const data::Dataset& pool, const fewshot::ClassSplit& split, std::size_t shots,
                                     std::uint64_t run_seed, std::size_t max_queries) {
  if (shots == 0) throw std::invalid_argument("shots must be positive");
  const auto& novel = split.novel_ids();
  std::vector<std::vector<std::size_t>> holders(novel.size());
  std::vector<std::size_t> queries;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    bool any = false;
    for (std::size_t c = 0; c < novel.size(); ++c) {
      if (contains(pool.samples[i], novel[c])) {
        holders[c].push_back(i);
        any = true;
      }
    }
    if (any) queries.push_back(i);
  }
  for (std::size_t c = 0; c < novel.size(); ++c) {
    // the query itself is excluded, so one spare image is needed
    if (holders[c].size() < shots + 1)
      throw std::invalid_argument("novel class " + std::to_string(novel[c]) + " has only " +
                                  std::to_string(holders[c].size()) + " images, need " + std::to_string(shots + 1));
  }

  if (max_queries > 0 && max_queries < queries.size()) {
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < max_queries; ++k) kept.push_back(queries[k * queries.size() / max_queries]);
    queries = std::move(kept);
  }

  std::vector<Episode> out;
  out.reserve(queries.size());
  for (auto q : queries) {
    const std::uint64_t qseed = num::derive_seed(run_seed, q);
    num::Rng rng(num::derive_seed(qseed, 0));
    Episode e{q, {}, num::derive_seed(qseed, 1)};
    for (const auto& list : holders) {
      std::vector<std::size_t> cand;
      for (auto i : list)
        if (i != q) cand.push_back(i);
      for (std::size_t k = 0; k < shots; ++k) {
        std::swap(cand[k], cand[k + rng.uniform_int(cand.size() - k)]);
        e.support_indices.push_back(cand[k]);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<data::Sample> support_set(const data::Dataset& pool, const Episode& episode,
                                      const fewshot::ClassSplit& split) {
  std::vector<data::Sample> out;
  out.reserve(episode.support_indices.size());
  for (auto i : episode.support_indices) {
    if (i >= pool.size()) throw std::out_of_range("support index outside pool");
    data::Sample s = pool.samples[i];
    s.mask = data::novel_only_mask(s.mask, split);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gfss::eval
