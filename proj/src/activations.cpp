#include "miflow/activations.hpp"

#include <array>
#include <sstream>
#include <utility>

#include "miflow/errors.hpp"

namespace miflow {

namespace {

constexpr std::array<std::pair<std::string_view, Activation>, 4> kRegistry{{
    {"tanh", Activation(ActivationKind::tanh)},
    {"identity", Activation(ActivationKind::identity)},
    {"relu", Activation(ActivationKind::relu)},
    {"hard-tanh", Activation(ActivationKind::hard_tanh)},
}};

}  // namespace

std::string_view Activation::name() const noexcept {
  for (const auto& [name, act] : kRegistry) {
    if (act.kind() == kind_) return name;
  }
  return "unknown";
}

const Activation& get_activation(std::string_view name) {
  for (const auto& entry : kRegistry) {
    if (entry.first == name) return entry.second;
  }
  std::ostringstream os;
  os << "unknown activation '" << name << "'; registered:";
  for (const auto& entry : kRegistry) os << ' ' << entry.first;
  throw ConfigError(os.str());
}

std::vector<std::string> registered_activations() {
  std::vector<std::string> out;
  for (const auto& entry : kRegistry) out.emplace_back(entry.first);
  return out;
}

}  // namespace miflow
