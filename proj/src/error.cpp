#include "neuronlab/error.hpp"

namespace neuronlab {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_dimensions: return "invalid-dimensions";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::not_strictly_increasing: return "activation-not-strictly-increasing";
    case Errc::unsupported_distribution: return "unsupported-distribution";
    case Errc::non_finite_iterate: return "non-finite-iterate";
    case Errc::metric_missing: return "metric-missing";
    case Errc::missing_gamma: return "missing-gamma";
    case Errc::missing_input: return "missing-input";
    case Errc::uncalibrated_c0: return "uncalibrated-c0";
    case Errc::insufficient_logging: return "insufficient-logging";
    case Errc::unbounded_labels: return "unbounded-labels";
    case Errc::invalid_tail_parameters: return "invalid-tail-parameters";
    case Errc::dimension_too_large: return "dimension-too-large";
    case Errc::unreachable_target: return "unreachable-target";
    case Errc::config_invalid: return "config-invalid";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace neuronlab
