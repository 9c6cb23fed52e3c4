#pragma once

namespace mft {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mft
