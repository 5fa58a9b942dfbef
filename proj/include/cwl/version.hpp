#pragma once

namespace cwl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cwl
