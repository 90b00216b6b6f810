// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hashlane/hashlane.hpp"

using namespace hashlane;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

struct Tables {
  std::vector<LinearEncoderModel> models;
  MultiTableIndex index;
};

Tables build_tables(const FeatureSet& base, EncoderKind kind, unsigned l, std::size_t count,
                    std::uint64_t seed) {
  Tables out;
  std::vector<CodeSet> codes;
  for (std::size_t t = 0; t < count; ++t) {
    out.models.push_back(kind == EncoderKind::lsh ? train_lsh(base, l, seed + t)
                                                  : train_isoh(base, l, seed + t));
    codes.push_back(encode_all(out.models.back(), base));
  }
  out.index = MultiTableIndex::build(codes);
  return out;
}

FeatureSet random_features(std::mt19937_64& rng, std::size_t n, std::size_t d, bool grid,
                           bool labeled) {
  std::normal_distribution<float> normal;
  std::vector<float> values(n * d);
  for (auto& v : values) v = grid ? static_cast<float>(rng() % 3) : normal(rng);
  std::optional<std::vector<std::int32_t>> labels;
  if (labeled) {
    labels.emplace(n);
    for (auto& l : *labels) l = static_cast<std::int32_t>(rng() % 50);
  }
  return FeatureSet(n, d, std::move(values), std::move(labels));
}

// Hashed search with P = n against exact search, ties included.
Verdict oracle_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  const std::size_t ks[] = {1, 10, 100};
  std::size_t queries_checked = 0;
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t n = 100 + rng() % 4901;
    const std::size_t d = 1 + rng() % 64;
    const std::size_t k = ks[instance % 3];
    const bool grid = instance % 2 == 1;  // small integer grid: many exact ties
    const auto base = random_features(rng, n, d, grid, false);
    const unsigned l = 6 + static_cast<unsigned>(rng() % 10);
    const bool isoh = !grid && l <= d;
    const auto tables =
        build_tables(base, isoh ? EncoderKind::isoh : EncoderKind::lsh, l, 1 + rng() % 3, rng());
    Searcher searcher(tables.index, base);
    const auto queries = random_features(rng, 10, d, grid, false);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto got = searcher.search(tables.models, queries.row(q), SearchParams{n, k});
      const auto want = brute_force(base, queries.row(q), k);
      if (got.ids != want.ids || got.distances != want.distances)
        return {false, fmt("instance %d (n=%zu d=%zu K=%zu) query %zu differs", instance, n, d, k, q)};
      ++queries_checked;
    }
  }
  const double secs = seconds_since(start);
  return {secs < 10.0, fmt("20 instances, %zu queries identical; %.2fs (limit 10s)", queries_checked, secs)};
}

Verdict ball_count_formula() {
  std::vector<std::vector<WideCount>> rows(33);
  for (unsigned l = 0; l <= 32; ++l) {
    rows[l].assign(l + 1, 1);
    for (unsigned i = 1; i < l; ++i) rows[l][i] = rows[l - 1][i - 1] + rows[l - 1][i];
  }
  std::size_t checked = 0;
  for (unsigned l = 0; l <= 32; ++l) {
    WideCount sum = 0;
    for (unsigned r = 0; r <= l; ++r) {
      sum += rows[l][r];
      if (ball_size(l, r) != sum) return {false, fmt("mismatch at l=%u r=%u", l, r)};
      ++checked;
    }
  }
  for (unsigned l = 0; l <= 20; ++l)
    if (ball_size(l, l) != (WideCount{1} << l)) return {false, fmt("ball_size(%u,%u) != 2^%u", l, l, l)};
  return {true, fmt("%zu (l, r) pairs match Pascal's triangle; full balls equal 2^l for l <= 20", checked)};
}

Verdict isoh_isotropy() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> normal;
  const std::size_t n = 2000, d = 32;
  // Correlated, anisotropic, full-rank data: x = A z.
  std::vector<double> mix(d * d);
  for (auto& a : mix) a = normal(rng);
  std::vector<float> values(n * d);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) z[k] = normal(rng) * (1.0 + static_cast<double>(k));
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += mix[r * d + k] * z[k];
      values[i * d + r] = static_cast<float>(s);
    }
  }
  const FeatureSet data(n, d, std::move(values));

  double worst = 0.0;
  for (unsigned l : {8u, 16u}) {
    const auto model = train_isoh(data, l, 3);
    std::vector<double> var(l, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = data.row(i);
      for (unsigned j = 0; j < l; ++j) {
        const auto w = model.column(j);
        double p = 0.0;
        for (std::size_t k = 0; k < d; ++k) p += (x[k] - model.mean[k]) * w[k];
        var[j] += p * p;
      }
    }
    for (auto& v : var) v /= static_cast<double>(n);
    const double mean = std::accumulate(var.begin(), var.end(), 0.0) / l;
    for (double v : var) worst = std::max(worst, std::fabs(v - mean) / mean);
  }
  return {worst <= 1e-6, fmt("max relative deviation %.3g over l in {8, 16} (limit 1e-6)", worst)};
}

Verdict crc_identity() {
  const std::size_t classes = 10, per_class = 50, per_class_queries = 20, k = 10;
  const auto data = make_clusters({classes, per_class, 16, 0.3, 303, per_class_queries});
  const auto& base = data.base;
  const auto& queries = *data.queries;
  const auto model = train_crc(classes, 12, 9);
  const std::vector<CodeSet> codes{encode_crc_all(model, base.labels())};
  const auto index = MultiTableIndex::build(codes);
  const auto buckets = bucket_stats(index.table(0)).non_empty;
  const double nq = static_cast<double>(queries.size());

  std::mt19937_64 rng(404);
  std::string detail = fmt("%zu non-empty buckets for c=%zu;", buckets, classes);
  bool pass = buckets == classes;
  for (double alpha : {0.5, 0.8, 1.0}) {
    // Stub predictor: a random subset of round((1 - alpha) nq) queries gets a wrong class.
    std::vector<std::int32_t> predicted(queries.labels().begin(), queries.labels().end());
    std::vector<std::size_t> order(predicted.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto wrong = static_cast<std::size_t>(std::lround((1.0 - alpha) * nq));
    for (std::size_t i = 0; i < wrong; ++i) {
      auto& p = predicted[order[i]];
      p = static_cast<std::int32_t>((static_cast<std::size_t>(p) + 1 + rng() % (classes - 1)) % classes);
    }
    const std::vector<CodeSet> qcodes{encode_crc_all(model, predicted)};
    const auto sweep = run_sweep(index, base, queries, qcodes, SweepOptions{"crc", k, {per_class}, 1, 0.01});
    const double precision = sweep.records[0].mean_precision;
    pass = pass && std::fabs(precision - alpha) <= 1.0 / nq;
    detail += fmt(" alpha=%.1f -> %.4f", alpha, precision);
  }
  return {pass, detail + fmt(" (tolerance 1/n_q = %.4f)", 1.0 / nq)};
}

// Shared data for the multi-table and code-length criteria.
ClusterData trend_data() { return make_clusters({10, 5000, 32, 0.8, 1, 50}); }

/// Runs a sweep `repeats` times and keeps, per pool size, the fastest run.
/// Precision is identical across repeats; only the clocks differ.
std::vector<BenchRecord> fastest_sweep(const Tables& tables, const FeatureSet& base,
                                       const FeatureSet& queries,
                                       const std::vector<std::size_t>& pools, int repeats) {
  const auto codes = encode_queries(tables.models, queries);
  std::vector<BenchRecord> best;
  for (int rep = 0; rep < repeats; ++rep) {
    auto records = run_sweep(tables.index, base, queries, codes, SweepOptions{"lsh", 10, pools, 1, 0.01}).records;
    if (best.empty()) {
      best = std::move(records);
      continue;
    }
    for (std::size_t i = 0; i < best.size(); ++i)
      if (records[i].total_ns < best[i].total_ns) best[i] = records[i];
  }
  return best;
}

Verdict multi_table_gain(const ClusterData& data) {
  const auto start = Clock::now();
  const auto& base = data.base;
  const auto& queries = *data.queries;
  std::vector<std::size_t> pools;
  for (std::size_t p = 10; p <= 1280; p *= 2) pools.push_back(p);

  const auto single = fastest_sweep(build_tables(base, EncoderKind::lsh, 24, 1, 1), base, queries, pools, 3);
  const auto multi = fastest_sweep(build_tables(base, EncoderKind::lsh, 24, 16, 1), base, queries, pools, 3);

  auto span_of = [](const std::vector<BenchRecord>& c) {
    auto [lo, hi] = std::minmax_element(c.begin(), c.end(), [](const auto& a, const auto& b) {
      return a.total_ns < b.total_ns;
    });
    return std::pair<double, double>(static_cast<double>(lo->total_ns), static_cast<double>(hi->total_ns));
  };
  const auto [lo1, hi1] = span_of(single);
  const auto [lo16, hi16] = span_of(multi);
  const double lo = std::max(lo1, lo16), hi = std::min(hi1, hi16);
  std::set<double> budgets;
  for (const auto* curve : {&single, &multi})
    for (const auto& r : *curve)
      if (r.total_ns >= lo && r.total_ns <= hi) budgets.insert(static_cast<double>(r.total_ns));
  if (budgets.empty()) return {false, "time ranges of the two curves do not overlap"};

  double worst = 1.0, best = -1.0, best_at = 0.0;
  for (double b : budgets) {
    const double gain = precision_at_budget(multi, b) - precision_at_budget(single, b);
    worst = std::min(worst, gain);
    if (gain > best) best = gain, best_at = b;
  }
  const double secs = seconds_since(start);
  return {worst >= 0.0 && best > 0.02 && secs < 300.0,
          fmt("%zu matched budgets; min gain %+.4f, max gain %+.4f at %.1f ms total; %.0fs (limit 300s)",
              budgets.size(), worst, best, best_at / 1e6, secs)};
}

Verdict code_length_growth(const ClusterData& data) {
  const auto start = Clock::now();
  const std::vector<unsigned> lengths{16, 24, 32};
  const auto rows = code_length_report(data.base, *data.queries, EncoderKind::lsh, lengths, 100, 1);
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      pass = pass && rows[i].mean_buckets_visited >= rows[i - 1].mean_buckets_visited;
      pass = pass && rows[i].radius0_fraction <= rows[i - 1].radius0_fraction;
    }
    detail += fmt("l=%u: %.1f buckets, r0 %.3f; ", rows[i].bits, rows[i].mean_buckets_visited,
                  rows[i].radius0_fraction);
  }
  const double secs = seconds_since(start);
  return {pass && secs < 300.0, detail + fmt("%.0fs (limit 300s)", secs)};
}

// Checked on separated clusters, where exact neighbours share the query's
// cluster. With overlapping clusters a hashed pool can beat exact search.
Verdict precision_monotone_and_capped() {
  const auto data = make_clusters({10, 5000, 32, 0.4, 1, 50});
  const auto& base = data.base;
  const auto& queries = *data.queries;
  const double ceiling = brute_force_precision(base, queries, 10);
  std::vector<std::size_t> pools;
  for (std::size_t p = 10; p <= 1280; p *= 2) pools.push_back(p);

  std::size_t records = 0;
  double lowest = 1.0, highest = 0.0;
  for (auto kind : {EncoderKind::lsh, EncoderKind::isoh})
    for (std::size_t count : {1, 4}) {
      const auto tables = build_tables(base, kind, 24, count, 1);
      const auto sweep = run_sweep(tables.index, base, queries, tables.models,
                                   SweepOptions{std::string(kind_name(kind)), 10, pools, 1, 0.01});
      for (std::size_t i = 0; i < sweep.records.size(); ++i) {
        const auto& r = sweep.records[i];
        lowest = std::min(lowest, r.mean_precision);
        highest = std::max(highest, r.mean_precision);
        ++records;
        if (r.mean_precision > ceiling + 1e-9)
          return {false, fmt("%s T=%zu P=%zu: %.4f above brute force %.4f", r.method.c_str(), count,
                             r.pool, r.mean_precision, ceiling)};
        if (i > 0 && r.mean_precision < sweep.records[i - 1].mean_precision)
          return {false, fmt("%s T=%zu: precision drops at P=%zu", r.method.c_str(), count, r.pool)};
      }
    }
  return {true, fmt("%zu records (lsh, isoh; T in {1,4}); precision %.4f..%.4f, brute force %.4f",
                    records, lowest, highest, ceiling)};
}

Verdict format_round_trips() {
  const auto dir = fs::temp_directory_path() / "hashlane_acceptance_formats";
  fs::remove_all(dir);
  std::mt19937_64 rng(808);
  std::size_t files = 0;
  auto same_after_reload = [&](const fs::path& path, const std::vector<std::uint8_t>& bytes,
                               const std::function<std::vector<std::uint8_t>(const fs::path&)>& reload) {
    write_file(path, bytes);
    ++files;
    return reload(path) == bytes;
  };

  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng() % 200, d = 2 + rng() % 20;
    const auto features = random_features(rng, n, d, false, trial % 2 == 0);
    if (!same_after_reload(dir / "f.fset", features_to_bytes(features),
                           [](const fs::path& p) { return features_to_bytes(read_features(p)); }))
      return {false, fmt("FSET1 trial %d", trial)};

    const unsigned l = 1 + static_cast<unsigned>(rng() % 64);
    std::vector<EncoderModel> models;
    models.emplace_back(train_lsh(features, l, rng()));
    if (l <= d) models.emplace_back(train_isoh(features, l, rng()));
    if (l >= 8) models.emplace_back(train_crc(1 + rng() % 200, l, rng()));
    for (const auto& m : models)
      if (!same_after_reload(dir / "m.hmdl", model_to_bytes(m),
                             [](const fs::path& p) { return model_to_bytes(read_model(p)); }))
        return {false, fmt("HMDL1 trial %d kind %d", trial, static_cast<int>(model_kind(m)))};

    std::vector<CodeSet> code_sets;
    const std::size_t tables = 1 + rng() % 4;
    for (std::size_t t = 0; t < tables; ++t) {
      CodeSet codes(l);
      const auto active = low_bits_mask(std::min(l, 1 + static_cast<unsigned>(rng() % 10)));
      for (std::size_t i = 0; i < n; ++i) codes.push_back(BinaryCode(rng() & active, l));
      if (!same_after_reload(dir / "c.cset", codes_to_bytes(codes),
                             [](const fs::path& p) { return codes_to_bytes(read_codes(p)); }))
        return {false, fmt("CSET1 trial %d", trial)};
      code_sets.push_back(std::move(codes));
    }
    if (!same_after_reload(dir / "i.hidx", index_to_bytes(MultiTableIndex::build(code_sets)),
                           [](const fs::path& p) { return index_to_bytes(read_index(p)); }))
      return {false, fmt("HIDX1 trial %d", trial)};
  }
  fs::remove_all(dir);
  return {true, fmt("%zu randomized FSET1/CSET1/HMDL1/HIDX1 files identical after write-read-write", files)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s  [%d] %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "oracle equivalence at P = n", oracle_equivalence);
  report(2, "ball-count formula", ball_count_formula);
  report(3, "IsoH isotropy", isoh_isotropy);
  report(4, "CRC precision equals predictor accuracy", crc_identity);
  const auto data = trend_data();
  report(5, "multi-table gain at matched time", [&] { return multi_table_gain(data); });
  report(6, "locating cost grows with code length", [&] { return code_length_growth(data); });
  report(7, "precision monotone in P and capped by brute force", precision_monotone_and_capped);
  report(8, "format round trips", format_round_trips);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
