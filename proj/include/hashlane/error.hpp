#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hashlane {

/// Error categories surfaced by the library and the command-line tool. Each
/// one maps to a stable snake_case name used in diagnostics.
enum class Errc {
  invalid_argument,
  length_mismatch,
  dimension_mismatch,
  empty_input,
  non_finite,
  bad_magic,
  truncated_file,
  trailing_bytes,
  io_error,
  missing_labels,
  label_out_of_range,
  code_space_too_small,
  degenerate_covariance,
  not_converged,
  table_count_mismatch,
  usage,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::non_finite: return "non_finite";
    case Errc::bad_magic: return "bad_magic";
    case Errc::truncated_file: return "truncated_file";
    case Errc::trailing_bytes: return "trailing_bytes";
    case Errc::io_error: return "io_error";
    case Errc::missing_labels: return "missing_labels";
    case Errc::label_out_of_range: return "label_out_of_range";
    case Errc::code_space_too_small: return "code_space_too_small";
    case Errc::degenerate_covariance: return "degenerate_covariance";
    case Errc::not_converged: return "not_converged";
    case Errc::table_count_mismatch: return "table_count_mismatch";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hashlane
