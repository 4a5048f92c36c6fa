#include "emoreg/error.hpp"

namespace emoreg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_score: return "invalid-score";
    case ErrorCode::invalid_annotation: return "invalid-annotation";
    case ErrorCode::input_too_short: return "input-too-short";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::degenerate_labels: return "degenerate-labels";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::window_size: return "window-size";
    case ErrorCode::missing_channel: return "missing-channel";
    case ErrorCode::recording_unusable: return "recording-unusable";
    case ErrorCode::no_clean_data: return "no-clean-data";
    case ErrorCode::stratification: return "stratification";
    case ErrorCode::no_candidates: return "no-candidates";
    case ErrorCode::undefined_score: return "undefined-score";
    case ErrorCode::undefined_correlation: return "undefined-correlation";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::version_mismatch: return "version-mismatch";
    case ErrorCode::checksum_mismatch: return "checksum-mismatch";
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::protocol_order: return "protocol-order";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::config_error: return "config-error";
  }
  return "unknown";
}

}  // namespace emoreg
