#pragma once

namespace toric {

inline constexpr const char* kToolName = "toricdec";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace toric
