#pragma once

namespace gmcluster {

inline constexpr const char* kVersion = "0.1.0";

} // namespace gmcluster
