#pragma once

#include <stdexcept>
#include <string>

namespace neuronlab {

enum class Errc {
  invalid_argument,
  invalid_dimensions,
  dimension_mismatch,
  not_strictly_increasing,
  unsupported_distribution,
  non_finite_iterate,
  metric_missing,
  missing_gamma,
  missing_input,
  uncalibrated_c0,
  insufficient_logging,
  unbounded_labels,
  invalid_tail_parameters,
  dimension_too_large,
  unreachable_target,
  config_invalid,
  io_error,
};

const char* to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace neuronlab
