#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "miflow/run_config.hpp"

namespace miflow::experiments {

/// Named figure-reproduction configs: fig3 .. fig7.
std::optional<RunConfig> find_preset(std::string_view name);
RunConfig preset(std::string_view name);  // throws ConfigError for unknown names
std::vector<std::string> preset_names();

}  // namespace miflow::experiments
