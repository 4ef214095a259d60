#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssidepth {

enum class ErrorKind {
  dimension,
  empty_mask,
  insufficient_data,
  degenerate_alignment,
  degenerate_scale,
  degenerate_range,
  domain,
  configuration,
  io,
  parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

// True for the kinds that signal numerically unusable input (singular
// alignment, zero deviation, empty valid set, ...), as opposed to malformed
// input or configuration.
bool is_numerical(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ssidepth
