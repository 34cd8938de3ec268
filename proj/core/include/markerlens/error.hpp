#pragma once

#include <stdexcept>
#include <string>

namespace markerlens {

// Every recoverable failure in the library is an Error carrying one of
// these codes. The code names double as the machine-readable identifiers
// printed by the CLI (`error=<name>`).
enum class Errc {
  file_not_found,
  unsupported_format,
  corrupt_data,
  io_failure,
  kernel_too_large,
  invalid_sigma,
  invalid_thresholds,
  negative_epsilon,
  too_few_vertices,
  detection_failed,
  degenerate_quad,
  coincident_points,
  marker_out_of_bounds,
  invalid_scene,
  shift_too_large,
  unknown_batch,
  out_of_range,
  parse_error,
  empty_dataset,
  non_finite_loss,
  dimension_mismatch,
  length_mismatch,
  empty_input,
  version_mismatch,
  checksum_mismatch,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }
  const char* code_name() const { return errc_name(code_); }

 private:
  Errc code_;
};

}  // namespace markerlens
