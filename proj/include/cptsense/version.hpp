#pragma once

#include <string_view>

namespace cptsense {

inline constexpr std::string_view project_name = "cptsense";
inline constexpr std::string_view project_version = "0.1.0";

}  // namespace cptsense
