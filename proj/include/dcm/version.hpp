#pragma once

namespace dcm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dcm
