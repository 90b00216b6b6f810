#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hashlane/core.hpp"
#include "hashlane/encoders.hpp"
#include "hashlane/error.hpp"
#include "hashlane/index.hpp"
#include "hashlane/search.hpp"

namespace hashlane {

/// One point of a precision-time curve. Times are summed over all queries.
struct BenchRecord {
  std::string method;
  std::size_t tables = 0;
  unsigned bits = 0;
  std::size_t pool = 0;
  std::size_t top_k = 0;
  double mean_precision = 0.0;
  std::int64_t total_locate_ns = 0;
  std::int64_t total_scan_ns = 0;
  std::int64_t total_ns = 0;
  std::size_t query_count = 0;
};

/// How many queries finished locating at each hamming radius.
struct RadiusHistogram {
  unsigned bits = 0;
  std::size_t pool = 0;
  std::map<unsigned, std::size_t> counts;

  std::size_t total() const {
    std::size_t sum = 0;
    for (const auto& [r, c] : counts) sum += c;
    return sum;
  }
};

struct SweepResult {
  std::vector<BenchRecord> records;
  std::vector<RadiusHistogram> histograms;
};

struct SweepOptions {
  std::string method = "lsh";
  std::size_t top_k = 10;
  std::vector<std::size_t> pools;
  /// Workers > 1 shard queries; per-worker clocks are summed, which is not
  /// comparable with sequential timings.
  unsigned workers = 1;
  double warmup_fraction = 0.01;
};

/// |{returned ids sharing the query label}| / K. Short result lists still
/// divide by K.
inline double precision_at_k(std::span<const ItemId> result_ids,
                             std::span<const std::int32_t> base_labels,
                             std::int32_t query_label, std::size_t top_k) {
  if (base_labels.empty()) fail(Errc::missing_labels, "precision needs base labels");
  if (top_k == 0) fail(Errc::invalid_argument, "top-k must be positive");
  std::size_t relevant = 0;
  for (ItemId id : result_ids.first(std::min(result_ids.size(), top_k))) {
    if (id >= base_labels.size()) fail(Errc::invalid_argument, "result id outside base set");
    if (base_labels[id] == query_label) ++relevant;
  }
  return static_cast<double>(relevant) / static_cast<double>(top_k);
}

/// P in {K, 2K, 4K, ...} capped at n (n itself is always the last entry).
inline std::vector<std::size_t> default_pool_schedule(std::size_t top_k, std::size_t n) {
  if (top_k == 0 || top_k > n) fail(Errc::invalid_argument, "top-k must lie in 1..n");
  std::vector<std::size_t> pools;
  for (std::size_t p = top_k; p < n; p *= 2) pools.push_back(p);
  pools.push_back(n);
  return pools;
}

/// Mean precision@K of exact search: the ceiling hashing methods converge to.
inline double brute_force_precision(const FeatureSet& base, const FeatureSet& queries,
                                    std::size_t top_k) {
  const auto base_labels = base.labels();
  const auto query_labels = queries.labels();
  double sum = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto result = brute_force(base, queries.row(q), top_k);
    sum += precision_at_k(result.ids, base_labels, query_labels[q], top_k);
  }
  return sum / static_cast<double>(queries.size());
}

namespace detail {

struct QueryOutcome {
  double precision = 0.0;
  std::int64_t locate_ns = 0;
  std::int64_t scan_ns = 0;
  unsigned final_radius = 0;
};

inline std::vector<BinaryCode> query_codes_for(std::span<const CodeSet> query_codes,
                                               std::size_t q) {
  std::vector<BinaryCode> codes;
  codes.reserve(query_codes.size());
  for (const auto& set : query_codes) codes.push_back(set[q]);
  return codes;
}

inline void run_queries(const MultiTableIndex& index, const FeatureSet& base,
                        const FeatureSet& queries, std::span<const CodeSet> query_codes,
                        const SearchParams& params, std::size_t begin, std::size_t end,
                        std::span<QueryOutcome> out) {
  Searcher searcher(index, base);
  const auto base_labels = base.labels();
  const auto query_labels = queries.labels();
  for (std::size_t q = begin; q < end; ++q) {
    const auto codes = query_codes_for(query_codes, q);
    const auto result = searcher.search(queries.row(q), codes, params);
    auto& o = out[q];
    o.precision = precision_at_k(result.ids, base_labels, query_labels[q], params.top_k);
    o.locate_ns = result.locate_ns;
    o.scan_ns = result.scan_ns;
    o.final_radius = result.final_radius;
  }
}

}  // namespace detail

/// Runs every query at every pool size in `options.pools` and aggregates one
/// BenchRecord and one RadiusHistogram per pool size. `query_codes[t]` holds
/// the precomputed query codes for table t, so coding time never enters the
/// clocks.
inline SweepResult run_sweep(const MultiTableIndex& index, const FeatureSet& base,
                             const FeatureSet& queries, std::span<const CodeSet> query_codes,
                             const SweepOptions& options) {
  if (!base.has_labels()) fail(Errc::missing_labels, "base set has no labels");
  if (!queries.has_labels()) fail(Errc::missing_labels, "query set has no labels");
  if (options.pools.empty()) fail(Errc::invalid_argument, "empty pool schedule");
  if (!std::is_sorted(options.pools.begin(), options.pools.end()))
    fail(Errc::invalid_argument, "pool schedule must be ascending");
  if (options.top_k > options.pools.front())
    fail(Errc::invalid_argument, "top-k exceeds the smallest pool size");
  if (query_codes.size() != index.table_count())
    fail(Errc::table_count_mismatch, "one query code set per table is required");
  for (const auto& set : query_codes)
    if (set.size() != queries.size())
      fail(Errc::length_mismatch, "query code count differs from query count");

  const std::size_t nq = queries.size();
  const unsigned workers = std::max(1u, options.workers);
  const auto warmup = static_cast<std::size_t>(
      std::ceil(options.warmup_fraction * static_cast<double>(nq)));

  SweepResult sweep;
  std::vector<detail::QueryOutcome> outcomes(nq);
  for (std::size_t pool : options.pools) {
    const SearchParams params{pool, options.top_k};
    if (warmup > 0) {
      std::vector<detail::QueryOutcome> scratch(nq);
      detail::run_queries(index, base, queries, query_codes, params, 0, std::min(warmup, nq),
                          scratch);
    }

    if (workers == 1) {
      detail::run_queries(index, base, queries, query_codes, params, 0, nq, outcomes);
    } else {
      std::vector<std::thread> threads;
      const std::size_t chunk = (nq + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(nq, w * chunk);
        const std::size_t end = std::min(nq, begin + chunk);
        threads.emplace_back([&, begin, end] {
          detail::run_queries(index, base, queries, query_codes, params, begin, end, outcomes);
        });
      }
      for (auto& t : threads) t.join();
    }

    BenchRecord record;
    record.method = options.method;
    record.tables = index.table_count();
    record.bits = index.length();
    record.pool = pool;
    record.top_k = options.top_k;
    record.query_count = nq;
    RadiusHistogram histogram{index.length(), pool, {}};
    double precision_sum = 0.0;
    for (const auto& o : outcomes) {
      precision_sum += o.precision;
      record.total_locate_ns += o.locate_ns;
      record.total_scan_ns += o.scan_ns;
      ++histogram.counts[o.final_radius];
    }
    record.total_ns = record.total_locate_ns + record.total_scan_ns;
    record.mean_precision = precision_sum / static_cast<double>(nq);
    sweep.records.push_back(std::move(record));
    sweep.histograms.push_back(std::move(histogram));
  }
  return sweep;
}

inline std::vector<CodeSet> encode_queries(std::span<const LinearEncoderModel> models,
                                           const FeatureSet& queries) {
  std::vector<CodeSet> codes;
  codes.reserve(models.size());
  for (const auto& m : models) codes.push_back(encode_all(m, queries));
  return codes;
}

inline SweepResult run_sweep(const MultiTableIndex& index, const FeatureSet& base,
                             const FeatureSet& queries, std::span<const LinearEncoderModel> models,
                             const SweepOptions& options) {
  const auto codes = encode_queries(models, queries);
  return run_sweep(index, base, queries, codes, options);
}

/// Best precision reachable within `budget_ns` on a precision-time curve,
/// linearly interpolated between sweep points. Points are ordered by time and
/// precision is taken as a running maximum, so timing noise that reorders two
/// neighbouring pool sizes cannot make the curve dip. Returns NaN below the
/// cheapest point.
inline double precision_at_budget(std::span<const BenchRecord> curve, double budget_ns) {
  if (curve.empty()) fail(Errc::invalid_argument, "empty curve");
  std::vector<std::pair<double, double>> points;
  for (const auto& r : curve)
    points.emplace_back(static_cast<double>(r.total_ns), r.mean_precision);
  std::sort(points.begin(), points.end());
  for (std::size_t i = 1; i < points.size(); ++i)
    points[i].second = std::max(points[i].second, points[i - 1].second);

  if (budget_ns < points.front().first) return std::numeric_limits<double>::quiet_NaN();
  if (budget_ns >= points.back().first) return points.back().second;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& [t1, p1] = points[i];
    if (budget_ns > t1) continue;
    const auto& [t0, p0] = points[i - 1];
    if (t1 == t0) return p1;
    return p0 + (p1 - p0) * (budget_ns - t0) / (t1 - t0);
  }
  return points.back().second;
}

/// Locating cost at one code length.
struct CodeLengthRow {
  unsigned bits = 0;
  std::size_t pool = 0;
  double mean_buckets_visited = 0.0;
  double mean_final_radius = 0.0;
  double radius0_fraction = 0.0;
  std::vector<WideCount> ball_sizes;  // r = 0..min(l, 4)
  double mean_locate_ns = 0.0;
  RadiusHistogram histogram;
};

/// Locates `pool` candidates for every query code in a single table built over
/// `base_codes` and summarises how far the radius had to grow.
inline CodeLengthRow measure_locating(const CodeSet& base_codes, const CodeSet& query_codes,
                                      std::size_t pool) {
  if (query_codes.empty()) fail(Errc::empty_input, "no query codes");
  if (query_codes.length() != base_codes.length())
    fail(Errc::length_mismatch, "query and base codes differ in length");
  std::vector<HashTable> tables;
  tables.push_back(build_table(base_codes));
  const MultiTableIndex index(std::move(tables));
  Locator locator(index);

  CodeLengthRow row;
  row.bits = base_codes.length();
  row.pool = pool;
  row.histogram = RadiusHistogram{row.bits, pool, {}};
  double visited = 0.0;
  double radius = 0.0;
  double locate_ns = 0.0;
  std::size_t at_zero = 0;
  for (std::size_t q = 0; q < query_codes.size(); ++q) {
    const BinaryCode code = query_codes[q];
    const auto t0 = std::chrono::steady_clock::now();
    const auto located = locator.locate(std::span<const BinaryCode>(&code, 1), pool);
    const auto t1 = std::chrono::steady_clock::now();
    locate_ns += static_cast<double>(detail::elapsed_ns(t0, t1));
    visited += static_cast<double>(located.buckets_visited);
    radius += located.final_radius;
    if (located.final_radius == 0) ++at_zero;
    ++row.histogram.counts[located.final_radius];
  }
  const auto nq = static_cast<double>(query_codes.size());
  row.mean_buckets_visited = visited / nq;
  row.mean_final_radius = radius / nq;
  row.radius0_fraction = static_cast<double>(at_zero) / nq;
  row.mean_locate_ns = locate_ns / nq;
  for (unsigned r = 0; r <= std::min(row.bits, 4u); ++r)
    row.ball_sizes.push_back(ball_size(row.bits, r));
  return row;
}

/// Trains one linear encoder per code length and measures locating at fixed P.
inline std::vector<CodeLengthRow> code_length_report(const FeatureSet& base,
                                                     const FeatureSet& queries, EncoderKind kind,
                                                     std::span<const unsigned> lengths,
                                                     std::size_t pool, std::uint64_t seed) {
  if (kind == EncoderKind::crc)
    fail(Errc::invalid_argument, "code length report needs a linear encoder (lsh or isoh)");
  std::vector<CodeLengthRow> rows;
  for (unsigned l : lengths) {
    check_code_length(l);
    const auto model = kind == EncoderKind::lsh ? train_lsh(base, l, seed) : train_isoh(base, l, seed);
    rows.push_back(measure_locating(encode_all(model, base), encode_all(model, queries), pool));
  }
  return rows;
}

namespace detail {

inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

/// Precision-time records as CSV. A non-empty `note` becomes a leading
/// `# ` comment line.
inline std::string emit_csv(std::span<const BenchRecord> records, const std::string& note = {}) {
  if (records.empty()) fail(Errc::invalid_argument, "no records to emit");
  std::string out;
  if (!note.empty()) out += "# " + note + "\n";
  out += "method,tables,bits,pool,top_k,precision,locate_ns,scan_ns,total_ns,queries\n";
  for (const auto& r : records) {
    out += r.method + "," + std::to_string(r.tables) + "," + std::to_string(r.bits) + "," +
           std::to_string(r.pool) + "," + std::to_string(r.top_k) + "," +
           detail::format_fixed6(r.mean_precision) + "," + std::to_string(r.total_locate_ns) +
           "," + std::to_string(r.total_scan_ns) + "," + std::to_string(r.total_ns) + "," +
           std::to_string(r.query_count) + "\n";
  }
  return out;
}

inline std::string emit_radius_csv(std::span<const RadiusHistogram> histograms) {
  std::string out = "bits,pool,radius,count\n";
  for (const auto& h : histograms)
    for (const auto& [r, count] : h.counts)
      out += std::to_string(h.bits) + "," + std::to_string(h.pool) + "," + std::to_string(r) +
             "," + std::to_string(count) + "\n";
  return out;
}

inline std::string emit_code_length_csv(std::span<const CodeLengthRow> rows) {
  std::string out =
      "bits,pool,mean_buckets_visited,mean_final_radius,radius0_fraction,"
      "ball_r0,ball_r1,ball_r2,ball_r3,ball_r4,mean_locate_ns\n";
  for (const auto& row : rows) {
    out += std::to_string(row.bits) + "," + std::to_string(row.pool) + "," +
           detail::format_fixed6(row.mean_buckets_visited) + "," +
           detail::format_fixed6(row.mean_final_radius) + "," +
           detail::format_fixed6(row.radius0_fraction);
    for (unsigned r = 0; r <= 4; ++r)
      out += "," + (r < row.ball_sizes.size() ? to_string(row.ball_sizes[r]) : std::string{});
    out += "," + detail::format_fixed6(row.mean_locate_ns) + "\n";
  }
  return out;
}

}  // namespace hashlane
