#pragma once

namespace pfbp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pfbp
