#pragma once

namespace trendlens {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace trendlens
