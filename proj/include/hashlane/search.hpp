#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hashlane/core.hpp"
#include "hashlane/encoders.hpp"
#include "hashlane/error.hpp"
#include "hashlane/index.hpp"

namespace hashlane {

struct QueryResult {
  std::vector<ItemId> ids;        // ascending by (distance, id)
  std::vector<double> distances;  // squared Euclidean
  std::int64_t locate_ns = 0;
  std::int64_t scan_ns = 0;
  unsigned final_radius = 0;
  std::size_t pool_size_used = 0;
  std::uint64_t buckets_visited = 0;
};

/// Squared Euclidean distance, accumulated in double left to right.
inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += diff * diff;
  }
  return acc;
}

namespace detail {

using Scored = std::pair<double, ItemId>;

/// Keeps the k smallest (distance, id) pairs, ordered.
inline void keep_top_k(std::vector<Scored>& scored, std::size_t k) {
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  scored.resize(k);
}

inline void fill_result(QueryResult& out, const std::vector<Scored>& scored) {
  out.ids.clear();
  out.distances.clear();
  for (const auto& [dist, id] : scored) {
    out.ids.push_back(id);
    out.distances.push_back(dist);
  }
}

inline std::int64_t elapsed_ns(std::chrono::steady_clock::time_point from,
                               std::chrono::steady_clock::time_point to) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(to - from).count();
}

}  // namespace detail

inline void check_query(const FeatureSet& base, std::span<const float> query, std::size_t top_k) {
  if (query.size() != base.dim())
    fail(Errc::dimension_mismatch, "query dimension " + std::to_string(query.size()) +
                                       " differs from base dimension " +
                                       std::to_string(base.dim()));
  if (top_k == 0) fail(Errc::invalid_argument, "top-k must be positive");
  if (top_k > base.size()) fail(Errc::invalid_argument, "top-k exceeds base size");
}

/// Exact K nearest neighbours by full scan.
inline QueryResult brute_force(const FeatureSet& base, std::span<const float> query,
                               std::size_t top_k) {
  check_query(base, query, top_k);
  const auto start = std::chrono::steady_clock::now();
  std::vector<detail::Scored> scored;
  scored.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    scored.emplace_back(squared_distance(query, base.row(i)), static_cast<ItemId>(i));
  detail::keep_top_k(scored, top_k);
  QueryResult out;
  detail::fill_result(out, scored);
  out.scan_ns = detail::elapsed_ns(start, std::chrono::steady_clock::now());
  out.pool_size_used = base.size();
  return out;
}

/// Query execution over a frozen index: locate a pool of at most P candidates,
/// rerank them by true distance and keep the K nearest. Query encoding happens
/// before the clocks start, so only locating and scanning are timed.
class Searcher {
 public:
  Searcher(const MultiTableIndex& index, const FeatureSet& base)
      : index_(&index), base_(&base), locator_(index) {
    if (index.item_count() != base.size())
      fail(Errc::length_mismatch, "index and base feature set differ in item count");
  }

  QueryResult search(std::span<const float> query, std::span<const BinaryCode> query_codes,
                     const SearchParams& params) {
    params.validate();
    check_query(*base_, query, params.top_k);

    QueryResult out;
    const auto t0 = std::chrono::steady_clock::now();
    auto located = locator_.locate(query_codes, params.pool_size);
    const auto t1 = std::chrono::steady_clock::now();

    scored_.clear();
    scored_.reserve(located.candidate_ids.size());
    for (ItemId id : located.candidate_ids)
      scored_.emplace_back(squared_distance(query, base_->row(id)), id);
    detail::keep_top_k(scored_, params.top_k);
    const auto t2 = std::chrono::steady_clock::now();

    detail::fill_result(out, scored_);
    out.locate_ns = detail::elapsed_ns(t0, t1);
    out.scan_ns = detail::elapsed_ns(t1, t2);
    out.final_radius = located.final_radius;
    out.pool_size_used = located.candidate_ids.size();
    out.buckets_visited = located.buckets_visited;
    return out;
  }

  /// Encodes the query with each table's linear model, then searches.
  QueryResult search(std::span<const LinearEncoderModel> models, std::span<const float> query,
                     const SearchParams& params) {
    if (models.size() != index_->table_count())
      fail(Errc::table_count_mismatch, "one encoder model per table is required");
    std::vector<BinaryCode> codes;
    codes.reserve(models.size());
    for (const auto& m : models) codes.push_back(encode(m, query));
    return search(query, codes, params);
  }

 private:
  const MultiTableIndex* index_;
  const FeatureSet* base_;
  Locator locator_;
  std::vector<detail::Scored> scored_;
};

inline QueryResult search(const MultiTableIndex& index, const FeatureSet& base,
                          std::span<const LinearEncoderModel> models, std::span<const float> query,
                          const SearchParams& params) {
  Searcher searcher(index, base);
  return searcher.search(models, query, params);
}

}  // namespace hashlane
