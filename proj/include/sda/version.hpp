#pragma once

namespace sda {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sda
