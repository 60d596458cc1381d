// version.hpp: library version constant, embedded in analysis reports.

#pragma once

namespace evtail {

inline constexpr const char* version_string = "0.1.0";

}  // namespace evtail
