#pragma once

namespace charcurve {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace charcurve
