#include "cavmd/error.hpp"

namespace cavmd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::domain_error: return "domain_error";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::index_out_of_range: return "index_out_of_range";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::no_convergence: return "no_convergence";
    case ErrorCode::stale_solution: return "stale_solution";
    case ErrorCode::config_parse: return "config_parse";
    case ErrorCode::config_validation: return "config_validation";
    case ErrorCode::missing_observable: return "missing_observable";
    case ErrorCode::signal_too_short: return "signal_too_short";
    case ErrorCode::peaks_not_found: return "peaks_not_found";
    case ErrorCode::imaginary_frequency: return "imaginary_frequency";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace cavmd
