#pragma once

#include <string>

namespace sgdlab {

inline constexpr const char* kVersionString = "sgdlab 0.1.0";

}  // namespace sgdlab
