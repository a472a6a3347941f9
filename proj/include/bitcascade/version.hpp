#pragma once

namespace bitcascade {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace bitcascade
