#pragma once

namespace filagauge {

inline constexpr const char* kVersion = "1.0.0";

} // namespace filagauge
