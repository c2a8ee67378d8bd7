#pragma once

namespace macsic {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace macsic
