#pragma once

namespace qamle {

inline constexpr const char* kToolName    = "qamle";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace qamle
