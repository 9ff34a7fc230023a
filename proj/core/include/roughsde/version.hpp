#pragma once

namespace roughsde {

inline constexpr const char* kVersion = "roughsde 0.1.0";

}  // namespace roughsde
