#pragma once

namespace iiks {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace iiks
