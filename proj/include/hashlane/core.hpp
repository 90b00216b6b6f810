#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hashlane/error.hpp"

namespace hashlane {

/// A code always fits one machine word, so bucket keys are plain integers.
inline constexpr unsigned kMaxCodeLength = 64;

/// Wide unsigned integer for bucket-count arithmetic; Σ C(64, i) reaches 2^64.
using WideCount = unsigned __int128;

inline std::string to_string(WideCount value) {
  if (value == 0) return "0";
  std::string digits;
  while (value != 0) {
    digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  return digits;
}

constexpr std::uint64_t low_bits_mask(unsigned length) noexcept {
  return length >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << length) - 1;
}

inline void check_code_length(unsigned length) {
  if (length < 1 || length > kMaxCodeLength)
    fail(Errc::invalid_argument,
         "code length " + std::to_string(length) + " outside 1..64");
}

constexpr std::size_t code_bytes(unsigned length) noexcept {
  return (length + 7) / 8;
}

/// An l-bit binary code. Bit j lives at bit j of the word, which is the same
/// as byte j/8, bit j%8 of the little-endian packed byte layout. Bits at
/// positions >= l are always zero.
class BinaryCode {
 public:
  BinaryCode(std::uint64_t bits, unsigned length) : bits_(bits), length_(length) {
    check_code_length(length);
    if ((bits & ~low_bits_mask(length)) != 0)
      fail(Errc::invalid_argument, "code has bits set beyond its length");
  }

  std::uint64_t bits() const noexcept { return bits_; }
  unsigned length() const noexcept { return length_; }
  bool bit(unsigned j) const noexcept { return ((bits_ >> j) & 1U) != 0; }

  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out(code_bytes(length_));
    for (std::size_t b = 0; b < out.size(); ++b)
      out[b] = static_cast<std::uint8_t>(bits_ >> (8 * b));
    return out;
  }

  static BinaryCode from_bytes(std::span<const std::uint8_t> bytes, unsigned length) {
    check_code_length(length);
    if (bytes.size() != code_bytes(length))
      fail(Errc::length_mismatch, "packed code byte count does not match length");
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < bytes.size(); ++b)
      bits |= std::uint64_t{bytes[b]} << (8 * b);
    return BinaryCode(bits, length);
  }

  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

 private:
  std::uint64_t bits_;
  unsigned length_;
};

inline unsigned hamming_distance(const BinaryCode& a, const BinaryCode& b) {
  if (a.length() != b.length())
    fail(Errc::length_mismatch, "hamming distance between codes of different length");
  return static_cast<unsigned>(std::popcount(a.bits() ^ b.bits()));
}

/// Packs a sequence of booleans; element j becomes bit j.
template <std::ranges::sized_range Bools>
BinaryCode pack_bits(const Bools& bools) {
  if (std::ranges::size(bools) == 0 || std::ranges::size(bools) > kMaxCodeLength)
    fail(Errc::invalid_argument, "pack_bits needs 1..64 booleans");
  const auto length = static_cast<unsigned>(std::ranges::size(bools));
  std::uint64_t bits = 0;
  unsigned j = 0;
  for (bool b : bools) {
    if (b) bits |= std::uint64_t{1} << j;
    ++j;
  }
  return BinaryCode(bits, length);
}

inline std::vector<bool> unpack_bits(const BinaryCode& code) {
  std::vector<bool> out(code.length());
  for (unsigned j = 0; j < code.length(); ++j) out[j] = code.bit(j);
  return out;
}

/// Number of l-bit codes within hamming distance r of a fixed code:
/// sum over i = 0..r of C(l, i).
inline WideCount ball_size(unsigned length, unsigned radius) {
  if (radius > length)
    fail(Errc::invalid_argument, "radius exceeds code length");
  WideCount binom = 1;
  WideCount total = 1;
  for (unsigned i = 0; i < radius; ++i) {
    binom = binom * (length - i) / (i + 1);
    total += binom;
  }
  return total;
}

/// n packed codes of a common length, index-aligned with a FeatureSet.
class CodeSet {
 public:
  CodeSet() = default;
  explicit CodeSet(unsigned length) : length_(length) { check_code_length(length); }
  CodeSet(unsigned length, std::vector<std::uint64_t> words)
      : length_(length), words_(std::move(words)) {
    check_code_length(length);
    for (auto w : words_)
      if ((w & ~low_bits_mask(length)) != 0)
        fail(Errc::invalid_argument, "code has bits set beyond its length");
  }

  unsigned length() const noexcept { return length_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }

  BinaryCode operator[](std::size_t i) const { return BinaryCode(words_[i], length_); }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  void push_back(const BinaryCode& code) {
    if (code.length() != length_)
      fail(Errc::length_mismatch, "code length differs from code set length");
    words_.push_back(code.bits());
  }

  friend bool operator==(const CodeSet&, const CodeSet&) = default;

 private:
  unsigned length_ = 1;
  std::vector<std::uint64_t> words_;
};

/// n x d row-major float matrix with optional non-negative class labels.
class FeatureSet {
 public:
  FeatureSet() = default;

  FeatureSet(std::size_t count, std::size_t dim, std::vector<float> values,
             std::optional<std::vector<std::int32_t>> labels = std::nullopt)
      : count_(count), dim_(dim), values_(std::move(values)), labels_(std::move(labels)) {
    if (count == 0) fail(Errc::empty_input, "feature set has no items");
    if (dim == 0) fail(Errc::invalid_argument, "feature dimension must be positive");
    if (values_.size() != count * dim)
      fail(Errc::length_mismatch, "feature value count is not n*d");
    for (float v : values_)
      if (!std::isfinite(v)) fail(Errc::non_finite, "feature set contains NaN or Inf");
    if (labels_) {
      if (labels_->size() != count)
        fail(Errc::length_mismatch, "label count differs from item count");
      for (auto label : *labels_)
        if (label < 0) fail(Errc::label_out_of_range, "negative class label");
    }
  }

  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return std::span<const float>(values_).subspan(i * dim_, dim_);
  }

  bool has_labels() const noexcept { return labels_.has_value(); }
  std::span<const std::int32_t> labels() const {
    if (!labels_) fail(Errc::missing_labels, "feature set carries no labels");
    return *labels_;
  }
  const std::optional<std::vector<std::int32_t>>& optional_labels() const noexcept {
    return labels_;
  }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::optional<std::vector<std::int32_t>> labels_;
};

/// Pool size P (candidates gathered) and K (results returned).
struct SearchParams {
  std::size_t pool_size = 100;
  std::size_t top_k = 10;

  void validate() const {
    if (pool_size == 0 || top_k == 0)
      fail(Errc::invalid_argument, "pool size and top-k must be positive");
    if (top_k > pool_size) fail(Errc::invalid_argument, "top-k exceeds pool size");
  }
};

}  // namespace hashlane
