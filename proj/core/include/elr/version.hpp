#pragma once

namespace elr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace elr
