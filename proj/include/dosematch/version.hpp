#pragma once

namespace dosematch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dosematch
