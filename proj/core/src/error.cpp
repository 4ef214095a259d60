#include "ssidepth/error.hpp"

namespace ssidepth {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::empty_mask: return "empty_mask";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::degenerate_alignment: return "degenerate_alignment";
    case ErrorKind::degenerate_scale: return "degenerate_scale";
    case ErrorKind::degenerate_range: return "degenerate_range";
    case ErrorKind::domain: return "domain";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

bool is_numerical(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::empty_mask:
    case ErrorKind::insufficient_data:
    case ErrorKind::degenerate_alignment:
    case ErrorKind::degenerate_scale:
    case ErrorKind::degenerate_range:
    case ErrorKind::domain:
      return true;
    default:
      return false;
  }
}

}  // namespace ssidepth
