#pragma once

namespace slparse {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace slparse
