#pragma once

namespace vskgp {
inline constexpr const char* kVersion = "0.1.0";
}
