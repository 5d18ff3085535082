#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cavmd {

enum class ErrorCode {
  invalid_argument,
  domain_error,
  dimension_mismatch,
  index_out_of_range,
  numerical_failure,
  no_convergence,
  stale_solution,
  config_parse,
  config_validation,
  missing_observable,
  signal_too_short,
  peaks_not_found,
  imaginary_frequency,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code and, for trajectory failures,
/// the MD step at which it occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::size_t> step = {})
      : std::runtime_error(what), code_(code), step_(step) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> step_;
};

}  // namespace cavmd
