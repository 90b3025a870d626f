#pragma once

namespace fluidq {
inline constexpr const char* kVersion = "0.1.0";
}
