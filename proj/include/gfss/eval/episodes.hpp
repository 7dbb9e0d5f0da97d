#pragma once

#include <cstdint>
#include <vector>

#include "gfss/data/dataset.hpp"
#include "gfss/fewshot/class_split.hpp"

namespace gfss::eval {

/// One query with its support draw, by index into the inference pool.
/// support_indices holds `shots` entries per novel class, in novel-id order.
struct Episode {
  std::size_t query_index = 0;
  std::vector<std::size_t> support_indices;
  std::uint64_t seed = 0;
  bool operator==(const Episode&) const = default;
};

/// A query is suitable when its mask holds at least one novel pixel. Supports
/// are drawn per query from (run_seed, query index), so the draw for a query
/// does not depend on which other queries are sampled. max_queries == 0 keeps
/// every suitable query; otherwise an evenly strided subset is kept.
std::vector<Episode> sample_episodes(const data::Dataset& pool, const fewshot::ClassSplit& split, std::size_t shots,
                                     std::uint64_t run_seed, std::size_t max_queries = 0);

/// Support images with novel-only masks, in episode order.
std::vector<data::Sample> support_set(const data::Dataset& pool, const Episode& episode,
                                      const fewshot::ClassSplit& split);

}  // namespace gfss::eval
