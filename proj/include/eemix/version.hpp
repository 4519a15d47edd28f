#pragma once

namespace eemix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace eemix
