#pragma once

namespace turbres {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace turbres
