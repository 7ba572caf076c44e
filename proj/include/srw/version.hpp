#pragma once

namespace srw {

inline constexpr const char* kVersion = "0.1.0";

// Bumped when any binary container layout changes.
inline constexpr unsigned kFormatVersion = 1;

}  // namespace srw
