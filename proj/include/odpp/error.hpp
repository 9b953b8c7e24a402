#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace odpp {

enum class ErrorCode {
  dimension_mismatch,
  not_normalized,
  not_symmetric,
  not_psd,
  index_out_of_range,
  invalid_argument,
  isolated_vertex,
  disconnected_graph,
  zero_feature,
  non_finite,
  empty_input,
  parse_error,
  io_error,
  incompatible,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::not_normalized: return "not_normalized";
    case ErrorCode::not_symmetric: return "not_symmetric";
    case ErrorCode::not_psd: return "not_psd";
    case ErrorCode::index_out_of_range: return "index_out_of_range";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::isolated_vertex: return "isolated_vertex";
    case ErrorCode::disconnected_graph: return "disconnected_graph";
    case ErrorCode::zero_feature: return "zero_feature";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::incompatible: return "incompatible";
  }
  return "unknown";
}

/// Every failure raised by the library carries a stable code so the CLI can
/// print a one-line, machine-parsable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace odpp
