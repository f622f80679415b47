#pragma once

namespace focidose {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace focidose
