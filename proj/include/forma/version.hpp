#pragma once

namespace forma {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace forma
