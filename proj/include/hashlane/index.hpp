#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hashlane/core.hpp"
#include "hashlane/error.hpp"
#include "hashlane/io.hpp"

namespace hashlane {

using ItemId = std::uint32_t;

/// One hash table: bucket key (the l-bit code as an integer) -> ascending ids.
class HashTable {
 public:
  using Buckets = std::unordered_map<std::uint64_t, std::vector<ItemId>>;

  HashTable() = default;
  HashTable(unsigned length, std::size_t item_count, Buckets buckets)
      : length_(length), item_count_(item_count), buckets_(std::move(buckets)) {}

  unsigned length() const noexcept { return length_; }
  std::size_t item_count() const noexcept { return item_count_; }
  std::size_t bucket_count() const noexcept { return buckets_.size(); }
  const Buckets& buckets() const noexcept { return buckets_; }

  const std::vector<ItemId>* find(std::uint64_t key) const {
    auto it = buckets_.find(key);
    return it == buckets_.end() ? nullptr : &it->second;
  }

  std::vector<std::uint64_t> sorted_keys() const {
    std::vector<std::uint64_t> keys;
    keys.reserve(buckets_.size());
    for (const auto& [key, ids] : buckets_) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  friend bool operator==(const HashTable&, const HashTable&) = default;

 private:
  unsigned length_ = 1;
  std::size_t item_count_ = 0;
  Buckets buckets_;
};

inline HashTable build_table(const CodeSet& codes) {
  if (codes.empty()) fail(Errc::empty_input, "cannot build a table from an empty code set");
  if (codes.size() > 0xFFFFFFFFu) fail(Errc::invalid_argument, "more than 2^32 items");
  HashTable::Buckets buckets;
  const auto words = codes.words();
  for (std::size_t i = 0; i < words.size(); ++i)
    buckets[words[i]].push_back(static_cast<ItemId>(i));
  return HashTable(codes.length(), codes.size(), std::move(buckets));
}

/// T tables over the same n items with a common code length.
class MultiTableIndex {
 public:
  MultiTableIndex() = default;
  explicit MultiTableIndex(std::vector<HashTable> tables) : tables_(std::move(tables)) {
    if (tables_.empty()) fail(Errc::empty_input, "index needs at least one table");
    for (const auto& t : tables_) {
      if (t.length() != tables_.front().length())
        fail(Errc::length_mismatch, "tables disagree on code length");
      if (t.item_count() != tables_.front().item_count())
        fail(Errc::length_mismatch, "tables disagree on item count");
    }
  }

  static MultiTableIndex build(std::span<const CodeSet> code_sets) {
    std::vector<HashTable> tables;
    tables.reserve(code_sets.size());
    for (const auto& codes : code_sets) tables.push_back(build_table(codes));
    return MultiTableIndex(std::move(tables));
  }

  std::size_t table_count() const noexcept { return tables_.size(); }
  unsigned length() const noexcept { return tables_.front().length(); }
  std::size_t item_count() const noexcept { return tables_.front().item_count(); }
  const HashTable& table(std::size_t t) const { return tables_.at(t); }
  std::span<const HashTable> tables() const noexcept { return tables_; }

  friend bool operator==(const MultiTableIndex&, const MultiTableIndex&) = default;

 private:
  std::vector<HashTable> tables_;
};

struct LocateResult {
  std::vector<ItemId> candidate_ids;
  unsigned final_radius = 0;
  std::uint64_t buckets_visited = 0;
};

/// Gathers candidate pools from a frozen index. Holds the per-caller visited
/// set, so one Locator per thread; reusing it across queries avoids clearing
/// an n-sized array every call.
class Locator {
 public:
  explicit Locator(const MultiTableIndex& index)
      : index_(&index), stamp_(index.item_count(), 0) {}

  /// Radius-major, table-minor probing. For r = 0, 1, ...: for each table t,
  /// probe every bucket at hamming distance exactly r from query code t
  /// (r-subsets of bit positions in lexicographic order) and append unseen ids
  /// until `pool` distinct candidates are held. The bucket that crosses the
  /// limit contributes its lowest ids only. A pool larger than n yields all n.
  LocateResult locate(std::span<const BinaryCode> query_codes, std::size_t pool) {
    const auto& index = *index_;
    if (query_codes.size() != index.table_count())
      fail(Errc::table_count_mismatch, "got " + std::to_string(query_codes.size()) +
                                           " query codes for " +
                                           std::to_string(index.table_count()) + " tables");
    if (pool == 0) fail(Errc::invalid_argument, "pool size must be positive");
    const unsigned l = index.length();
    for (const auto& code : query_codes)
      if (code.length() != l) fail(Errc::length_mismatch, "query code length differs from index");

    next_epoch();
    const std::size_t limit = std::min(pool, index.item_count());
    LocateResult result;
    result.candidate_ids.reserve(limit);

    auto probe = [&](const HashTable& table, std::uint64_t key) {
      ++result.buckets_visited;
      const auto* ids = table.find(key);
      if (ids == nullptr) return false;
      for (ItemId id : *ids) {
        if (stamp_[id] == epoch_) continue;
        stamp_[id] = epoch_;
        result.candidate_ids.push_back(id);
        if (result.candidate_ids.size() == limit) return true;
      }
      return false;
    };

    std::vector<unsigned> flips;
    for (unsigned r = 0; r <= l; ++r) {
      result.final_radius = r;
      for (std::size_t t = 0; t < index.table_count(); ++t) {
        const auto& table = index.table(t);
        const std::uint64_t q = query_codes[t].bits();
        flips.resize(r);
        for (unsigned i = 0; i < r; ++i) flips[i] = i;
        while (true) {
          std::uint64_t key = q;
          for (unsigned b : flips) key ^= std::uint64_t{1} << b;
          if (probe(table, key)) return result;
          // Advance to the next r-subset of {0..l-1} in lexicographic order.
          int i = static_cast<int>(r) - 1;
          while (i >= 0 && flips[i] == l - r + static_cast<unsigned>(i)) --i;
          if (i < 0) break;
          ++flips[i];
          for (unsigned k = static_cast<unsigned>(i) + 1; k < r; ++k) flips[k] = flips[k - 1] + 1;
        }
      }
    }
    return result;
  }

 private:
  void next_epoch() {
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
  }

  const MultiTableIndex* index_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

inline LocateResult locate(const MultiTableIndex& index, std::span<const BinaryCode> query_codes,
                           std::size_t pool) {
  Locator locator(index);
  return locator.locate(query_codes, pool);
}

struct BucketStats {
  std::size_t non_empty = 0;
  std::size_t max_size = 0;
  double mean_size = 0.0;
  /// ball_size(l, r) for r = 0..min(l, 10).
  std::vector<WideCount> cumulative_buckets;
};

inline BucketStats bucket_stats(const HashTable& table) {
  BucketStats stats;
  stats.non_empty = table.bucket_count();
  for (const auto& [key, ids] : table.buckets()) stats.max_size = std::max(stats.max_size, ids.size());
  if (stats.non_empty > 0)
    stats.mean_size = static_cast<double>(table.item_count()) / static_cast<double>(stats.non_empty);
  for (unsigned r = 0; r <= std::min(table.length(), 10u); ++r)
    stats.cumulative_buckets.push_back(ball_size(table.length(), r));
  return stats;
}

// HIDX1: "HIDX1", u32 T, u32 l, u32 n, then per table: u64 bucket count,
// then per bucket (ascending key): u64 key, u32 size, size * u32 ids.

inline std::vector<std::uint8_t> index_to_bytes(const MultiTableIndex& index) {
  detail::ByteWriter w;
  w.magic("HIDX1");
  w.u32(detail::checked_u32(index.table_count(), "table count"));
  w.u32(index.length());
  w.u32(detail::checked_u32(index.item_count(), "item count"));
  for (const auto& table : index.tables()) {
    w.u64(table.bucket_count());
    for (auto key : table.sorted_keys()) {
      const auto& ids = *table.find(key);
      w.u64(key);
      w.u32(detail::checked_u32(ids.size(), "bucket size"));
      for (auto id : ids) w.u32(id);
    }
  }
  return w.take();
}

inline MultiTableIndex index_from_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("HIDX1");
  const std::size_t table_count = r.u32();
  const unsigned l = r.u32();
  const std::size_t n = r.u32();
  check_code_length(l);
  if (table_count == 0 || n == 0) fail(Errc::empty_input, "HIDX1 index is empty");

  std::vector<HashTable> tables;
  for (std::size_t t = 0; t < table_count; ++t) {
    const std::uint64_t bucket_count = r.u64();
    if (bucket_count > n) fail(Errc::invalid_argument, "more buckets than items");
    HashTable::Buckets buckets;
    std::vector<bool> seen(n, false);
    std::size_t total = 0;
    bool first = true;
    std::uint64_t previous = 0;
    for (std::uint64_t b = 0; b < bucket_count; ++b) {
      const std::uint64_t key = r.u64();
      if ((key & ~low_bits_mask(l)) != 0) fail(Errc::invalid_argument, "bucket key exceeds code length");
      if (!first && key <= previous) fail(Errc::invalid_argument, "bucket keys not strictly ascending");
      first = false;
      previous = key;
      const std::size_t size = r.u32();
      if (size == 0) fail(Errc::invalid_argument, "empty bucket stored");
      if (r.remaining() / 4 < size) fail(Errc::truncated_file, "bucket ids truncated");
      std::vector<ItemId> ids(size);
      for (auto& id : ids) {
        id = r.u32();
        if (id >= n || seen[id]) fail(Errc::invalid_argument, "item id out of range or repeated");
        seen[id] = true;
      }
      if (!std::is_sorted(ids.begin(), ids.end()))
        fail(Errc::invalid_argument, "bucket ids not ascending");
      total += size;
      buckets.emplace(key, std::move(ids));
    }
    if (total != n) fail(Errc::invalid_argument, "table does not partition all items");
    tables.emplace_back(l, n, std::move(buckets));
  }
  r.expect_end();
  return MultiTableIndex(std::move(tables));
}

inline void write_index(const std::filesystem::path& path, const MultiTableIndex& index) {
  write_file(path, index_to_bytes(index));
}

inline MultiTableIndex read_index(const std::filesystem::path& path) {
  return index_from_bytes(read_file(path));
}

}  // namespace hashlane
