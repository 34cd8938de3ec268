#include "markerlens/error.hpp"

namespace markerlens {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::file_not_found: return "file_not_found";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::corrupt_data: return "corrupt_data";
    case Errc::io_failure: return "io_failure";
    case Errc::kernel_too_large: return "kernel_too_large";
    case Errc::invalid_sigma: return "invalid_sigma";
    case Errc::invalid_thresholds: return "invalid_thresholds";
    case Errc::negative_epsilon: return "negative_epsilon";
    case Errc::too_few_vertices: return "too_few_vertices";
    case Errc::detection_failed: return "detection_failed";
    case Errc::degenerate_quad: return "degenerate_quad";
    case Errc::coincident_points: return "coincident_points";
    case Errc::marker_out_of_bounds: return "marker_out_of_bounds";
    case Errc::invalid_scene: return "invalid_scene";
    case Errc::shift_too_large: return "shift_too_large";
    case Errc::unknown_batch: return "unknown_batch";
    case Errc::out_of_range: return "out_of_range";
    case Errc::parse_error: return "parse_error";
    case Errc::empty_dataset: return "empty_dataset";
    case Errc::non_finite_loss: return "non_finite_loss";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::checksum_mismatch: return "checksum_mismatch";
  }
  return "unknown";
}

}  // namespace markerlens
