#pragma once

namespace hscal {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace hscal
