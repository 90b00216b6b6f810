#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "hashlane/core.hpp"
#include "hashlane/error.hpp"
#include "hashlane/io.hpp"
#include "hashlane/linalg.hpp"

namespace hashlane {

enum class EncoderKind : std::uint8_t { lsh = 0, isoh = 1, crc = 2 };

constexpr std::string_view kind_name(EncoderKind kind) noexcept {
  switch (kind) {
    case EncoderKind::lsh: return "lsh";
    case EncoderKind::isoh: return "isoh";
    case EncoderKind::crc: return "crc";
  }
  return "unknown";
}

inline EncoderKind parse_kind(std::string_view name) {
  if (name == "lsh") return EncoderKind::lsh;
  if (name == "isoh") return EncoderKind::isoh;
  if (name == "crc") return EncoderKind::crc;
  fail(Errc::invalid_argument, "unknown encoder kind '" + std::string(name) + "'");
}

/// Sign-of-projection encoder shared by LSH and IsoH: bit j is set iff
/// (x - mean) . W[:, j] > 0. `projection` is d x l, column-major.
struct LinearEncoderModel {
  EncoderKind kind = EncoderKind::lsh;
  std::size_t dim = 0;
  unsigned length = 0;
  std::vector<double> mean;
  std::vector<double> projection;
  std::uint64_t seed = 0;

  std::span<const double> column(unsigned j) const {
    return std::span<const double>(projection).subspan(j * dim, dim);
  }

  friend bool operator==(const LinearEncoderModel&, const LinearEncoderModel&) = default;
};

/// Classification random coding: one distinct random l-bit code per class.
struct CrcModel {
  std::size_t num_classes = 0;
  unsigned length = 0;
  std::vector<std::uint64_t> class_codes;
  std::uint64_t seed = 0;

  friend bool operator==(const CrcModel&, const CrcModel&) = default;
};

using EncoderModel = std::variant<LinearEncoderModel, CrcModel>;

inline EncoderKind model_kind(const EncoderModel& model) {
  if (const auto* linear = std::get_if<LinearEncoderModel>(&model)) return linear->kind;
  return EncoderKind::crc;
}

inline unsigned model_length(const EncoderModel& model) {
  return std::visit([](const auto& m) { return m.length; }, model);
}

inline LinearEncoderModel train_lsh(const FeatureSet& features, unsigned length,
                                    std::uint64_t seed) {
  if (features.size() == 0) fail(Errc::empty_input, "cannot train on an empty feature set");
  check_code_length(length);

  LinearEncoderModel model;
  model.kind = EncoderKind::lsh;
  model.dim = features.dim();
  model.length = length;
  model.seed = seed;
  model.mean = linalg::column_mean(features);
  model.projection.resize(model.dim * length);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& w : model.projection) w = normal(rng);
  return model;
}

namespace detail {

/// Rotates the l x l symmetric matrix `m` (and accumulates into `q`) until every
/// diagonal entry equals the mean eigenvalue. Each step pairs the largest and
/// smallest unequalised diagonal entries and applies the Givens rotation that
/// lands the larger one exactly on the target; that coordinate is then frozen,
/// so at most l - 1 rotations are needed. `priority` breaks value ties.
inline void equalize_diagonal(linalg::SquareMatrix& m, linalg::SquareMatrix& q,
                              std::span<const std::size_t> priority) {
  const std::size_t l = m.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < l; ++i) trace += m(i, i);
  const double target = trace / static_cast<double>(l);
  std::vector<bool> frozen(l, false);

  auto before = [&](std::size_t x, std::size_t y, bool larger) {
    if (m(x, x) != m(y, y)) return larger ? m(x, x) > m(y, y) : m(x, x) < m(y, y);
    return priority[x] < priority[y];
  };

  for (std::size_t step = 0; step + 1 < l; ++step) {
    std::size_t hi = l;
    std::size_t lo = l;
    for (std::size_t k = 0; k < l; ++k) {
      if (frozen[k]) continue;
      if (hi == l || before(k, hi, true)) hi = k;
      if (lo == l || before(k, lo, false)) lo = k;
    }
    const double p = m(hi, hi);
    const double s = m(lo, lo);
    if (hi == lo || p - s <= 1e-15 * std::fabs(target)) break;

    // Diagonal after rotating by theta: (p+s)/2 + h cos 2t + c sin 2t, h=(p-s)/2, c=m(hi,lo).
    const double half = 0.5 * (p - s);
    const double off = m(hi, lo);
    const double radius = std::hypot(half, off);
    const double phase = std::atan2(off, half);
    const double arg = std::clamp((target - 0.5 * (p + s)) / radius, -1.0, 1.0);
    const double theta = 0.5 * (phase + std::acos(arg));
    const double c = std::cos(theta);
    const double sn = std::sin(theta);

    // new e_hi = c e_hi + sn e_lo, new e_lo = -sn e_hi + c e_lo
    for (std::size_t k = 0; k < l; ++k) {
      const double a = m(k, hi);
      const double b = m(k, lo);
      m(k, hi) = c * a + sn * b;
      m(k, lo) = -sn * a + c * b;
    }
    for (std::size_t k = 0; k < l; ++k) {
      const double a = m(hi, k);
      const double b = m(lo, k);
      m(hi, k) = c * a + sn * b;
      m(lo, k) = -sn * a + c * b;
    }
    for (std::size_t k = 0; k < l; ++k) {
      const double a = q(k, hi);
      const double b = q(k, lo);
      q(k, hi) = c * a + sn * b;
      q(k, lo) = -sn * a + c * b;
    }
    m(hi, hi) = target;
    frozen[hi] = true;
  }
}

}  // namespace detail

/// Isotropic hashing: PCA to the top-l directions, then an orthogonal rotation
/// that gives every projected dimension the same variance (the mean of the
/// top-l eigenvalues). The seed flips eigenvector signs and orders ties, so
/// different seeds give different tables over the same data.
inline LinearEncoderModel train_isoh(const FeatureSet& features, unsigned length,
                                     std::uint64_t seed) {
  check_code_length(length);
  if (features.size() < 2) fail(Errc::empty_input, "IsoH needs at least two training items");
  if (length > features.dim())
    fail(Errc::invalid_argument, "IsoH code length " + std::to_string(length) +
                                     " exceeds feature dimension " +
                                     std::to_string(features.dim()));

  LinearEncoderModel model;
  model.kind = EncoderKind::isoh;
  model.dim = features.dim();
  model.length = length;
  model.seed = seed;
  model.mean = linalg::column_mean(features);

  const auto eig = linalg::symmetric_eigen(linalg::covariance(features, model.mean));
  const double largest = eig.values.front();
  if (!(largest > 0.0) || eig.values[length - 1] < 1e-12 * largest)
    fail(Errc::degenerate_covariance,
         "covariance rank is below the code length " + std::to_string(length));

  std::mt19937_64 rng(seed);
  std::vector<double> sign(length);
  std::bernoulli_distribution coin(0.5);
  for (auto& s : sign) s = coin(rng) ? -1.0 : 1.0;
  std::vector<std::size_t> priority(length);
  std::iota(priority.begin(), priority.end(), std::size_t{0});
  std::shuffle(priority.begin(), priority.end(), rng);

  linalg::SquareMatrix m(length);
  for (unsigned i = 0; i < length; ++i) m(i, i) = eig.values[i];
  auto q = linalg::SquareMatrix::identity(length);
  detail::equalize_diagonal(m, q, priority);

  const std::size_t d = model.dim;
  model.projection.assign(d * length, 0.0);
  for (unsigned j = 0; j < length; ++j)
    for (std::size_t k = 0; k < d; ++k) {
      double w = 0.0;
      for (unsigned r = 0; r < length; ++r) w += eig.vectors(k, r) * sign[r] * q(r, j);
      model.projection[j * d + k] = w;
    }
  return model;
}

inline BinaryCode encode(const LinearEncoderModel& model, std::span<const float> x) {
  if (x.size() != model.dim)
    fail(Errc::dimension_mismatch, "feature dimension " + std::to_string(x.size()) +
                                       " differs from model dimension " +
                                       std::to_string(model.dim));
  std::vector<double> centered(model.dim);
  for (std::size_t k = 0; k < model.dim; ++k) centered[k] = x[k] - model.mean[k];
  std::uint64_t bits = 0;
  for (unsigned j = 0; j < model.length; ++j) {
    const auto w = model.column(j);
    double dot = 0.0;
    for (std::size_t k = 0; k < model.dim; ++k) dot += centered[k] * w[k];
    if (dot > 0.0) bits |= std::uint64_t{1} << j;
  }
  return BinaryCode(bits, model.length);
}

inline CodeSet encode_all(const LinearEncoderModel& model, const FeatureSet& features) {
  CodeSet codes(model.length);
  for (std::size_t i = 0; i < features.size(); ++i) codes.push_back(encode(model, features.row(i)));
  return codes;
}

inline CrcModel train_crc(std::size_t num_classes, unsigned length, std::uint64_t seed) {
  check_code_length(length);
  if (num_classes == 0) fail(Errc::invalid_argument, "CRC needs at least one class");
  if (length < 64 && num_classes > (std::uint64_t{1} << length))
    fail(Errc::code_space_too_small,
         "code space smaller than class count: 2^" + std::to_string(length) + " < " +
             std::to_string(num_classes));

  CrcModel model;
  model.num_classes = num_classes;
  model.length = length;
  model.seed = seed;
  model.class_codes.reserve(num_classes);

  std::mt19937_64 rng(seed);
  const std::uint64_t max_code = low_bits_mask(length);
  // Dense code spaces: partial Fisher-Yates over every code; sparse: rejection.
  if (length < 64 && (std::uint64_t{1} << length) <= 4 * static_cast<std::uint64_t>(num_classes)) {
    std::vector<std::uint64_t> all(std::size_t{1} << length);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    for (std::size_t i = 0; i < num_classes; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
      model.class_codes.push_back(all[i]);
    }
  } else {
    std::uniform_int_distribution<std::uint64_t> draw(0, max_code);
    std::unordered_set<std::uint64_t> used;
    while (model.class_codes.size() < num_classes) {
      const auto v = draw(rng);
      if (used.insert(v).second) model.class_codes.push_back(v);
    }
  }
  return model;
}

inline BinaryCode encode_crc(const CrcModel& model, std::int32_t label) {
  if (label < 0 || static_cast<std::size_t>(label) >= model.num_classes)
    fail(Errc::label_out_of_range, "class label " + std::to_string(label) +
                                       " outside 0.." + std::to_string(model.num_classes - 1));
  return BinaryCode(model.class_codes[static_cast<std::size_t>(label)], model.length);
}

inline CodeSet encode_crc_all(const CrcModel& model, std::span<const std::int32_t> labels) {
  CodeSet codes(model.length);
  for (auto label : labels) codes.push_back(encode_crc(model, label));
  return codes;
}

/// Number of classes implied by a label vector (max label + 1).
inline std::size_t class_count(std::span<const std::int32_t> labels) {
  std::int32_t top = -1;
  for (auto label : labels) top = std::max(top, label);
  return static_cast<std::size_t>(top + 1);
}

// HMDL1: "HMDL1", u8 kind, u32 d, u32 l, u64 seed, then
//   linear: d f64 mean, d*l f64 projection (column-major)
//   crc:    u32 c, c codes in CSET1 bit layout

inline std::vector<std::uint8_t> model_to_bytes(const EncoderModel& model) {
  detail::ByteWriter w;
  w.magic("HMDL1");
  if (const auto* linear = std::get_if<LinearEncoderModel>(&model)) {
    w.u8(static_cast<std::uint8_t>(linear->kind));
    w.u32(detail::checked_u32(linear->dim, "dimension"));
    w.u32(linear->length);
    w.u64(linear->seed);
    for (double v : linear->mean) w.f64(v);
    for (double v : linear->projection) w.f64(v);
  } else {
    const auto& crc = std::get<CrcModel>(model);
    w.u8(static_cast<std::uint8_t>(EncoderKind::crc));
    w.u32(0);
    w.u32(crc.length);
    w.u64(crc.seed);
    w.u32(detail::checked_u32(crc.num_classes, "class count"));
    for (auto code : crc.class_codes) append_code_bytes(w, code, crc.length);
  }
  return w.take();
}

inline EncoderModel model_from_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("HMDL1");
  const auto kind_byte = r.u8();
  if (kind_byte > 2) fail(Errc::invalid_argument, "unknown model kind byte");
  const auto kind = static_cast<EncoderKind>(kind_byte);
  const std::size_t d = r.u32();
  const unsigned l = r.u32();
  const std::uint64_t seed = r.u64();
  check_code_length(l);

  if (kind == EncoderKind::crc) {
    if (d != 0) fail(Errc::dimension_mismatch, "CRC model must record d=0");
    CrcModel crc;
    crc.length = l;
    crc.seed = seed;
    crc.num_classes = r.u32();
    if (r.remaining() / code_bytes(l) < crc.num_classes)
      fail(Errc::truncated_file, "CRC class codes truncated");
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t i = 0; i < crc.num_classes; ++i) {
      const auto bits = BinaryCode::from_bytes(r.raw(code_bytes(l)), l).bits();
      if (!seen.insert(bits).second)
        fail(Errc::invalid_argument, "CRC model has duplicate class codes");
      crc.class_codes.push_back(bits);
    }
    r.expect_end();
    return crc;
  }

  if (d == 0) fail(Errc::dimension_mismatch, "linear model must have d >= 1");
  if (r.remaining() / 8 < d * (l + 1)) fail(Errc::truncated_file, "model parameters truncated");
  LinearEncoderModel linear;
  linear.kind = kind;
  linear.dim = d;
  linear.length = l;
  linear.seed = seed;
  linear.mean.resize(d);
  for (auto& v : linear.mean) v = r.f64();
  linear.projection.resize(d * l);
  for (auto& v : linear.projection) {
    v = r.f64();
    if (!std::isfinite(v)) fail(Errc::non_finite, "projection has non-finite entries");
  }
  r.expect_end();
  return linear;
}

inline void write_model(const std::filesystem::path& path, const EncoderModel& model) {
  write_file(path, model_to_bytes(model));
}

inline EncoderModel read_model(const std::filesystem::path& path) {
  return model_from_bytes(read_file(path));
}

}  // namespace hashlane
