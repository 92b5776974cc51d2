#pragma once

namespace flowgrad {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flowgrad
