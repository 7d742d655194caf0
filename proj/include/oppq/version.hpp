#pragma once

namespace oppq {

// Bumped whenever output or cache formats change incompatibly.
inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kCacheFormat = "oppq-cache-v1";

}  // namespace oppq
