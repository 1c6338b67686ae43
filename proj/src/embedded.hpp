#pragma once

#include <string_view>

namespace dfdx::embedded {

std::string_view images_yaml();
std::string_view rules_yaml();

} // namespace dfdx::embedded
