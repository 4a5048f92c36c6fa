#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emoreg {

enum class ErrorCode {
  invalid_score,
  invalid_annotation,
  input_too_short,
  insufficient_data,
  degenerate_labels,
  dimension_mismatch,
  window_size,
  missing_channel,
  recording_unusable,
  no_clean_data,
  stratification,
  no_candidates,
  undefined_score,
  undefined_correlation,
  parse_error,
  version_mismatch,
  checksum_mismatch,
  validation,
  not_found,
  protocol_order,
  io_error,
  config_error,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code so
// callers (the CLI, the HTTP service, tests) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }  // message without the code prefix

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace emoreg
