#pragma once

#include <string>

namespace ssidepth {

// Shortest decimal string that parses back to exactly `v`.
std::string shortest(double v);

// `v` with `digits` significant digits (printf %.{digits}g).
std::string significant(double v, int digits);

}  // namespace ssidepth
