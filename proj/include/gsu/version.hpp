#pragma once

namespace gsu {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gsu
