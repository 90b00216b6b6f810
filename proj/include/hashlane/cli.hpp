#pragma once

// Command-line driver: gen, train, encode, build, bench, oracle, stats.
// Lives in a header so the test suite can run commands in-process.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hashlane/bench.hpp"
#include "hashlane/core.hpp"
#include "hashlane/encoders.hpp"
#include "hashlane/error.hpp"
#include "hashlane/index.hpp"
#include "hashlane/io.hpp"
#include "hashlane/search.hpp"
#include "hashlane/synthetic.hpp"

namespace hashlane::cli {

namespace fs = std::filesystem;

inline std::string default_out_root() {
  if (const char* env = std::getenv("HASHLANE_OUT"); env != nullptr && *env != '\0') return env;
  return "hashlane_out";
}

/// Paths and parameters shared by the subcommands. Empty paths mean "not given".
struct RunConfig {
  std::string features;
  std::string queries;
  std::string labels;
  std::string predictions;
  std::string models;
  std::string codes;
  std::string index;
  std::string out;
  std::string method = "lsh";
  unsigned bits = 24;
  std::size_t tables = 1;
  std::uint64_t seed = 1;
  std::size_t k = 10;
  std::string pools;
  std::size_t classes = 0;
  unsigned parallel = 1;
  std::string lengths;
  std::size_t pool = 100;
  bool method_given = false;
  ClusterSpec gen;
};

inline std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      fail(Errc::usage, std::string("cannot parse ") + what + " entry '" + item + "'");
    }
  }
  return values;
}

/// 64-bit FNV-1a, used to name run directories after their configuration.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline fs::path run_directory(const std::string& root, const std::string& canonical_config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_config)));
  return fs::path(root) / buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline fs::path table_file(const fs::path& dir, std::size_t t, const char* ext) {
  char name[32];
  std::snprintf(name, sizeof name, "table_%03zu.%s", t, ext);
  return dir / name;
}

/// Files named table_NNN.<ext> in `dir`, in table order.
inline std::vector<fs::path> table_files(const fs::path& dir, const char* ext) {
  if (!fs::is_directory(dir)) fail(Errc::io_error, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (std::size_t t = 0; fs::exists(table_file(dir, t, ext)); ++t)
    files.push_back(table_file(dir, t, ext));
  if (files.empty())
    fail(Errc::io_error, "no table_000." + std::string(ext) + " in " + dir.string());
  return files;
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) fail(Errc::usage, std::string("missing required flag ") + flag);
}

inline std::vector<EncoderModel> load_models(const std::string& dir) {
  std::vector<EncoderModel> models;
  for (const auto& path : table_files(dir, "hmdl")) models.push_back(read_model(path));
  const auto kind = model_kind(models.front());
  for (const auto& m : models)
    if (model_kind(m) != kind || model_length(m) != model_length(models.front()))
      fail(Errc::invalid_argument, "model directory mixes kinds or code lengths");
  return models;
}

inline std::vector<LinearEncoderModel> linear_models(const std::vector<EncoderModel>& models) {
  std::vector<LinearEncoderModel> out;
  for (const auto& m : models) out.push_back(std::get<LinearEncoderModel>(m));
  return out;
}

/// Codes for `items` under every model: linear models encode the features,
/// CRC models encode `labels` (true labels for base items, predictions for
/// queries).
inline std::vector<CodeSet> encode_with(const std::vector<EncoderModel>& models,
                                        const FeatureSet* items,
                                        std::span<const std::int32_t> labels) {
  std::vector<CodeSet> codes;
  for (const auto& m : models) {
    if (const auto* linear = std::get_if<LinearEncoderModel>(&m)) {
      if (items == nullptr) fail(Errc::usage, "linear models need --features");
      codes.push_back(encode_all(*linear, *items));
    } else {
      if (labels.empty()) fail(Errc::missing_labels, "CRC encoding needs labels");
      codes.push_back(encode_crc_all(std::get<CrcModel>(m), labels));
    }
  }
  return codes;
}

inline int cmd_gen(const RunConfig& cfg, std::ostream& out) {
  const auto data = make_clusters(cfg.gen);
  const fs::path dir = cfg.out.empty() ? fs::path(default_out_root()) : fs::path(cfg.out);
  write_features(dir / "base.fset", data.base);
  out << (dir / "base.fset").string() << "\n";
  if (data.queries) {
    write_features(dir / "queries.fset", *data.queries);
    out << (dir / "queries.fset").string() << "\n";
  }
  return 0;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  const auto kind = parse_kind(cfg.method);
  if (cfg.tables == 0) fail(Errc::usage, "--tables must be at least 1");

  std::vector<EncoderModel> models;
  if (kind == EncoderKind::crc) {
    std::size_t classes = cfg.classes;
    if (classes == 0) {
      require(cfg.features, "--features (or --classes)");
      const auto fs_in = read_features(cfg.features);
      classes = class_count(fs_in.labels());
    }
    for (std::size_t t = 0; t < cfg.tables; ++t)
      models.emplace_back(train_crc(classes, cfg.bits, cfg.seed + t));
  } else {
    require(cfg.features, "--features");
    const auto features = read_features(cfg.features);
    for (std::size_t t = 0; t < cfg.tables; ++t) {
      if (kind == EncoderKind::lsh)
        models.emplace_back(train_lsh(features, cfg.bits, cfg.seed + t));
      else
        models.emplace_back(train_isoh(features, cfg.bits, cfg.seed + t));
    }
  }
  for (std::size_t t = 0; t < models.size(); ++t) {
    write_model(table_file(cfg.out, t, "hmdl"), models[t]);
    out << table_file(cfg.out, t, "hmdl").string() << "\n";
  }
  return 0;
}

inline int cmd_encode(const RunConfig& cfg, std::ostream& out) {
  require(cfg.models, "--models");
  require(cfg.out, "--out");
  const auto models = load_models(cfg.models);
  std::optional<FeatureSet> features;
  if (!cfg.features.empty()) features = read_features(cfg.features);
  std::vector<std::int32_t> labels;
  if (!cfg.labels.empty()) {
    labels = read_labels(cfg.labels);
  } else if (features && features->has_labels()) {
    labels.assign(features->labels().begin(), features->labels().end());
  }
  if (model_kind(models.front()) != EncoderKind::crc && !features)
    fail(Errc::usage, "missing required flag --features");

  const auto codes = encode_with(models, features ? &*features : nullptr, labels);
  for (std::size_t t = 0; t < codes.size(); ++t) {
    write_codes(table_file(cfg.out, t, "cset"), codes[t]);
    out << table_file(cfg.out, t, "cset").string() << "\n";
  }
  return 0;
}

inline int cmd_build(const RunConfig& cfg, std::ostream& out) {
  require(cfg.codes, "--codes");
  require(cfg.out, "--out");
  std::vector<CodeSet> code_sets;
  for (const auto& path : table_files(cfg.codes, "cset")) code_sets.push_back(read_codes(path));
  const auto index = MultiTableIndex::build(code_sets);
  write_index(cfg.out, index);
  out << cfg.out << "\n";
  return 0;
}

inline const char* kTimingNote =
    "times are locate+scan only (query coding excluded), summed over queries; "
    "untimed warm-up over 1% of queries precedes each pool size";

inline int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  require(cfg.index, "--index");
  require(cfg.features, "--features");
  require(cfg.queries, "--queries");
  require(cfg.models, "--models");

  // Load and validate every input before any work.
  const auto index = read_index(cfg.index);
  const auto base = read_features(cfg.features);
  const auto queries = read_features(cfg.queries);
  const auto models = load_models(cfg.models);
  std::vector<std::int32_t> predictions;
  if (!cfg.predictions.empty()) predictions = read_labels(cfg.predictions);

  if (!base.has_labels()) fail(Errc::missing_labels, "base features carry no labels");
  if (!queries.has_labels()) fail(Errc::missing_labels, "query features carry no labels");
  if (base.dim() != queries.dim())
    fail(Errc::dimension_mismatch, "base and query dimensions differ");
  if (index.item_count() != base.size())
    fail(Errc::length_mismatch, "index item count differs from base size");
  if (models.size() != index.table_count())
    fail(Errc::table_count_mismatch, "model count differs from index table count");
  if (model_length(models.front()) != index.length())
    fail(Errc::length_mismatch, "model code length differs from index");

  const bool crc = model_kind(models.front()) == EncoderKind::crc;
  if (crc) {
    if (predictions.empty()) fail(Errc::missing_labels, "CRC bench needs --predictions");
    if (predictions.size() != queries.size())
      fail(Errc::length_mismatch, "prediction count differs from query count");
  } else if (linear_models(models).front().dim != base.dim()) {
    fail(Errc::dimension_mismatch, "model dimension differs from base dimension");
  }

  SweepOptions options;
  options.method = cfg.method_given ? cfg.method
                                    : std::string(kind_name(model_kind(models.front())));
  options.top_k = cfg.k;
  options.pools = cfg.pools.empty() ? default_pool_schedule(cfg.k, base.size())
                                    : parse_size_list(cfg.pools, "--pools");
  options.workers = cfg.parallel;

  const auto query_codes = encode_with(models, &queries, predictions);
  const auto sweep = run_sweep(index, base, queries, query_codes, options);

  std::string note = kTimingNote;
  if (options.workers > 1)
    note += "; parallel mode with " + std::to_string(options.workers) +
            " workers, not comparable with sequential timings";
  std::ostringstream canon;
  canon << "bench|index=" << cfg.index << "|base=" << cfg.features << "|queries=" << cfg.queries
        << "|models=" << cfg.models << "|predictions=" << cfg.predictions
        << "|method=" << options.method << "|k=" << options.top_k << "|pools=";
  for (auto p : options.pools) canon << p << ",";
  canon << "|parallel=" << options.workers;
  const auto dir = run_directory(cfg.out.empty() ? default_out_root() : cfg.out, canon.str());
  write_text(dir / "sweep.csv", emit_csv(sweep.records, note));
  write_text(dir / "radius.csv", emit_radius_csv(sweep.histograms));
  out << dir.string() << "\n";
  return 0;
}

inline int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  require(cfg.features, "--features");
  require(cfg.queries, "--queries");
  const auto base = read_features(cfg.features);
  const auto queries = read_features(cfg.queries);
  if (!base.has_labels()) fail(Errc::missing_labels, "base features carry no labels");
  if (!queries.has_labels()) fail(Errc::missing_labels, "query features carry no labels");
  if (base.dim() != queries.dim())
    fail(Errc::dimension_mismatch, "base and query dimensions differ");

  BenchRecord record;
  record.method = "bruteforce";
  record.pool = base.size();
  record.top_k = cfg.k;
  record.query_count = queries.size();
  double sum = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto result = brute_force(base, queries.row(q), cfg.k);
    sum += precision_at_k(result.ids, base.labels(), queries.labels()[q], cfg.k);
    record.total_scan_ns += result.scan_ns;
  }
  record.mean_precision = sum / static_cast<double>(queries.size());
  record.total_ns = record.total_scan_ns;

  std::ostringstream canon;
  canon << "oracle|base=" << cfg.features << "|queries=" << cfg.queries << "|k=" << cfg.k;
  const auto dir = run_directory(cfg.out.empty() ? default_out_root() : cfg.out, canon.str());
  const std::vector<BenchRecord> records{record};
  write_text(dir / "oracle.csv", emit_csv(records, "exact search; scan time only"));
  out << dir.string() << "\n";
  return 0;
}

inline int cmd_stats(const RunConfig& cfg, std::ostream& out) {
  std::string text;
  if (!cfg.index.empty()) {
    const auto index = read_index(cfg.index);
    text = "table,bits,items,non_empty,max_size,mean_size";
    for (unsigned r = 0; r <= std::min(index.length(), 10u); ++r)
      text += ",ball_r" + std::to_string(r);
    text += "\n";
    for (std::size_t t = 0; t < index.table_count(); ++t) {
      const auto s = bucket_stats(index.table(t));
      text += std::to_string(t) + "," + std::to_string(index.length()) + "," +
              std::to_string(index.item_count()) + "," + std::to_string(s.non_empty) + "," +
              std::to_string(s.max_size) + "," + detail::format_fixed6(s.mean_size);
      for (auto c : s.cumulative_buckets) text += "," + to_string(c);
      text += "\n";
    }
  } else {
    require(cfg.features, "--index or --features");
    require(cfg.queries, "--queries");
    require(cfg.lengths, "--lengths");
    const auto base = read_features(cfg.features);
    const auto queries = read_features(cfg.queries);
    if (base.dim() != queries.dim())
      fail(Errc::dimension_mismatch, "base and query dimensions differ");
    std::vector<unsigned> lengths;
    for (auto l : parse_size_list(cfg.lengths, "--lengths")) lengths.push_back(static_cast<unsigned>(l));
    const auto rows =
        code_length_report(base, queries, parse_kind(cfg.method), lengths, cfg.pool, cfg.seed);
    text = emit_code_length_csv(rows);
  }
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_text(cfg.out, text);
    out << cfg.out << "\n";
  }
  return 0;
}

/// Reads `key=value` lines (blank lines and `#` comments ignored) into
/// `--key value` tokens.
inline std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::usage, "config line without '=': " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    tokens.push_back("--" + trim(line.substr(0, eq)));
    tokens.push_back(trim(line.substr(eq + 1)));
  }
  return tokens;
}

/// Splices config-file tokens in right after the subcommand, so explicit flags
/// (which come later and use last-value-wins) override the file.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t span = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      span = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      span = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + span));
    const auto tokens = config_tokens(path);
    const std::size_t at = args.empty() ? 0 : 1;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    break;
  }
  return args;
}

inline void print_error(std::ostream& err, std::string_view code, const std::string& message) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::replace(flat.begin(), flat.end(), '"', '\'');
  err << "error: code=" << code << " message=\"" << flat << "\"\n";
}

/// Runs one command. `args` excludes the program name. Returns the exit code;
/// failures print one `error: code=<name> message="..."` line to `err`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"hashlane: multi-table binary hashing search and precision-time benchmarking",
               "hashlane"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", "hashlane 0.1.0");
  app.add_option("--config", "key=value file; explicit flags override it");

  auto* gen = app.add_subcommand("gen", "Generate Gaussian-cluster base/query feature files");
  gen->add_option("--clusters", cfg.gen.clusters, "Number of clusters")->capture_default_str();
  gen->add_option("--per-cluster", cfg.gen.per_cluster, "Base items per cluster")->capture_default_str();
  gen->add_option("--dim", cfg.gen.dim, "Feature dimension")->capture_default_str();
  gen->add_option("--spread", cfg.gen.spread, "Isotropic standard deviation")->capture_default_str();
  gen->add_option("--seed", cfg.gen.seed, "Random seed")->capture_default_str();
  gen->add_option("--queries-per-cluster", cfg.gen.queries_per_cluster,
                  "Query items per cluster (0 = no query file)")->capture_default_str();
  gen->add_option("--out", cfg.out, "Output directory (default $HASHLANE_OUT)");

  auto* train = app.add_subcommand("train", "Train T encoder models with seeds seed..seed+T-1");
  train->add_option("--features", cfg.features, "FSET1 training features");
  train->add_option("--method", cfg.method, "lsh | isoh | crc")->capture_default_str();
  train->add_option("--bits", cfg.bits, "Code length l (1..64)")->capture_default_str();
  train->add_option("--tables", cfg.tables, "Number of tables T")->capture_default_str();
  train->add_option("--seed", cfg.seed, "Seed of the first table")->capture_default_str();
  train->add_option("--classes", cfg.classes, "CRC class count (default: from labels)");
  train->add_option("--out", cfg.out, "Model directory");

  auto* enc = app.add_subcommand("encode", "Encode features (or labels, for CRC) per table");
  enc->add_option("--models", cfg.models, "Model directory");
  enc->add_option("--features", cfg.features, "FSET1 features to encode");
  enc->add_option("--labels", cfg.labels, "Labels file for CRC (e.g. predicted query labels)");
  enc->add_option("--out", cfg.out, "Code directory");

  auto* build = app.add_subcommand("build", "Build a multi-table index from code files");
  build->add_option("--codes", cfg.codes, "Code directory");
  build->add_option("--out", cfg.out, "HIDX1 output file");

  auto* bench = app.add_subcommand("bench", "Precision-time sweep over pool sizes");
  bench->add_option("--index", cfg.index, "HIDX1 index");
  bench->add_option("--features", cfg.features, "FSET1 base features (labelled)");
  bench->add_option("--queries", cfg.queries, "FSET1 query features (labelled)");
  bench->add_option("--models", cfg.models, "Model directory");
  bench->add_option("--predictions", cfg.predictions, "Predicted query labels (CRC)");
  bench->add_option("--method", cfg.method, "Method name written to the CSV");
  bench->add_option("--k", cfg.k, "Results per query K")->capture_default_str();
  bench->add_option("--pools", cfg.pools, "Comma-separated ascending pool sizes (default K,2K,4K,..,n)");
  bench->add_option("--parallel", cfg.parallel, "Worker threads")->capture_default_str();
  bench->add_option("--out", cfg.out, "Output root (default $HASHLANE_OUT)");

  auto* oracle = app.add_subcommand("oracle", "Brute-force precision@K ceiling");
  oracle->add_option("--features", cfg.features, "FSET1 base features (labelled)");
  oracle->add_option("--queries", cfg.queries, "FSET1 query features (labelled)");
  oracle->add_option("--k", cfg.k, "Results per query K")->capture_default_str();
  oracle->add_option("--out", cfg.out, "Output root (default $HASHLANE_OUT)");

  auto* stats = app.add_subcommand("stats", "Bucket occupancy, or locating cost by code length");
  stats->add_option("--index", cfg.index, "HIDX1 index (occupancy mode)");
  stats->add_option("--features", cfg.features, "FSET1 base features (code-length mode)");
  stats->add_option("--queries", cfg.queries, "FSET1 queries (code-length mode)");
  stats->add_option("--method", cfg.method, "lsh | isoh")->capture_default_str();
  stats->add_option("--lengths", cfg.lengths, "Comma-separated code lengths");
  stats->add_option("--pool", cfg.pool, "Pool size P")->capture_default_str();
  stats->add_option("--seed", cfg.seed, "Encoder seed")->capture_default_str();
  stats->add_option("--out", cfg.out, "Write CSV here instead of stdout");

  for (auto* sub : app.get_subcommands({})) sub->option_defaults()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);

  try {
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "hashlane 0.1.0\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(err, e.name(), e.what());
    return 2;
  }

  cfg.method_given = bench->get_option("--method")->count() > 0;
  try {
    if (gen->parsed()) return cmd_gen(cfg, out);
    if (train->parsed()) return cmd_train(cfg, out);
    if (enc->parsed()) return cmd_encode(cfg, out);
    if (build->parsed()) return cmd_build(cfg, out);
    if (bench->parsed()) return cmd_bench(cfg, out);
    if (oracle->parsed()) return cmd_oracle(cfg, out);
    if (stats->parsed()) return cmd_stats(cfg, out);
  } catch (const Error& e) {
    print_error(err, e.name(), e.what());
    return e.code() == Errc::usage ? 2 : 1;
  } catch (const std::bad_variant_access&) {
    print_error(err, "invalid_argument", "model kind does not fit this command");
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace hashlane::cli
