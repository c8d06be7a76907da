#pragma once

#include <string_view>

namespace maxgrad {

inline constexpr std::string_view kVersion = "0.1.0";

}
