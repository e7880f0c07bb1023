#pragma once

namespace hivemon {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hivemon
