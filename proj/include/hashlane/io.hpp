#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashlane/core.hpp"
#include "hashlane/error.hpp"

namespace hashlane {

namespace detail {

/// Little-endian byte sink. All on-disk integers and floats go through here so
/// files are identical regardless of host byte order.
class ByteWriter {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void expect_magic(std::string_view tag) {
    if (bytes_.size() < tag.size() ||
        std::memcmp(bytes_.data(), tag.data(), tag.size()) != 0)
      fail(Errc::bad_magic, "expected magic bytes " + std::string(tag));
    pos_ = tag.size();
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0) fail(Errc::trailing_bytes, "unexpected bytes after end of record");
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail(Errc::truncated_file, "file ends before record is complete");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) fail(Errc::invalid_argument, std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::io_error, "read failed for " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) fail(Errc::io_error, "write failed for " + path.string());
}

// FSET1: "FSET1", u32 n, u32 d, u8 has_labels, n*d f32 row-major, [n i32].

inline std::vector<std::uint8_t> features_to_bytes(const FeatureSet& fs) {
  detail::ByteWriter w;
  w.magic("FSET1");
  w.u32(detail::checked_u32(fs.size(), "item count"));
  w.u32(detail::checked_u32(fs.dim(), "dimension"));
  w.u8(fs.has_labels() ? 1 : 0);
  for (float v : fs.values()) w.f32(v);
  if (fs.has_labels())
    for (auto label : fs.labels()) w.i32(label);
  return w.take();
}

inline FeatureSet features_from_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("FSET1");
  const std::size_t n = r.u32();
  const std::size_t d = r.u32();
  const auto flag = r.u8();
  if (flag > 1) fail(Errc::invalid_argument, "FSET1 has_labels byte must be 0 or 1");
  const bool has_labels = flag == 1;
  if (d == 0) fail(Errc::dimension_mismatch, "FSET1 file has d=0 (labels-only file?)");
  if (r.remaining() / 4 < n * d) fail(Errc::truncated_file, "FSET1 values truncated");
  std::vector<float> values(n * d);
  for (auto& v : values) v = r.f32();
  std::optional<std::vector<std::int32_t>> labels;
  if (has_labels) {
    labels.emplace(n);
    for (auto& label : *labels) label = r.i32();
  }
  r.expect_end();
  return FeatureSet(n, d, std::move(values), std::move(labels));
}

inline void write_features(const std::filesystem::path& path, const FeatureSet& fs) {
  write_file(path, features_to_bytes(fs));
}

inline FeatureSet read_features(const std::filesystem::path& path) {
  return features_from_bytes(read_file(path));
}

// Predicted labels share the FSET1 layout with d = 0 and has_labels = 1.

inline std::vector<std::uint8_t> labels_to_bytes(std::span<const std::int32_t> labels) {
  detail::ByteWriter w;
  w.magic("FSET1");
  w.u32(detail::checked_u32(labels.size(), "label count"));
  w.u32(0);
  w.u8(1);
  for (auto label : labels) w.i32(label);
  return w.take();
}

inline std::vector<std::int32_t> labels_from_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("FSET1");
  const std::size_t n = r.u32();
  const std::size_t d = r.u32();
  const bool has_labels = r.u8() != 0;
  if (d != 0) fail(Errc::dimension_mismatch, "labels file must have d=0");
  if (!has_labels) fail(Errc::missing_labels, "labels file carries no labels");
  if (r.remaining() / 4 < n) fail(Errc::truncated_file, "labels truncated");
  std::vector<std::int32_t> labels(n);
  for (auto& label : labels) {
    label = r.i32();
    if (label < 0) fail(Errc::label_out_of_range, "negative class label");
  }
  r.expect_end();
  return labels;
}

inline void write_labels(const std::filesystem::path& path, std::span<const std::int32_t> labels) {
  write_file(path, labels_to_bytes(labels));
}

inline std::vector<std::int32_t> read_labels(const std::filesystem::path& path) {
  return labels_from_bytes(read_file(path));
}

// CSET1: "CSET1", u32 n, u32 l, n * ceil(l/8) packed bytes.

inline void append_code_bytes(detail::ByteWriter& w, std::uint64_t bits, unsigned length) {
  for (std::size_t b = 0; b < code_bytes(length); ++b)
    w.u8(static_cast<std::uint8_t>(bits >> (8 * b)));
}

inline std::vector<std::uint8_t> codes_to_bytes(const CodeSet& codes) {
  detail::ByteWriter w;
  w.magic("CSET1");
  w.u32(detail::checked_u32(codes.size(), "code count"));
  w.u32(codes.length());
  for (auto bits : codes.words()) append_code_bytes(w, bits, codes.length());
  return w.take();
}

inline CodeSet codes_from_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("CSET1");
  const std::size_t n = r.u32();
  const unsigned l = r.u32();
  check_code_length(l);
  const std::size_t width = code_bytes(l);
  if (r.remaining() / width < n) fail(Errc::truncated_file, "CSET1 codes truncated");
  std::vector<std::uint64_t> words(n);
  for (auto& w : words) w = BinaryCode::from_bytes(r.raw(width), l).bits();
  r.expect_end();
  return CodeSet(l, std::move(words));
}

inline void write_codes(const std::filesystem::path& path, const CodeSet& codes) {
  write_file(path, codes_to_bytes(codes));
}

inline CodeSet read_codes(const std::filesystem::path& path) {
  return codes_from_bytes(read_file(path));
}

}  // namespace hashlane
