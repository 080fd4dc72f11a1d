#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace miflow {

enum class ActivationKind { tanh, identity, relu, hard_tanh };

/// A pointwise nonlinearity together with its derivative. All registered activations satisfy
/// eval(0) == 0. Kinks are resolved as deriv = 0 (relu at 0, hard-tanh at +-1).
class Activation {
 public:
  constexpr explicit Activation(ActivationKind kind) noexcept : kind_(kind) {}

  ActivationKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  double eval(double z) const noexcept {
    switch (kind_) {
      case ActivationKind::tanh: return std::tanh(z);
      case ActivationKind::identity: return z;
      case ActivationKind::relu: return z > 0.0 ? z : 0.0;
      case ActivationKind::hard_tanh: return std::clamp(z, -1.0, 1.0);
    }
    return z;
  }

  double deriv(double z) const noexcept {
    switch (kind_) {
      case ActivationKind::tanh: {
        const double c = std::cosh(z);
        return 1.0 / (c * c);
      }
      case ActivationKind::identity: return 1.0;
      case ActivationKind::relu: return z > 0.0 ? 1.0 : 0.0;
      case ActivationKind::hard_tanh: return (z > -1.0 && z < 1.0) ? 1.0 : 0.0;
    }
    return 1.0;
  }

  /// Points where eval or deriv is not smooth.
  std::span<const double> kinks() const noexcept {
    static constexpr double kRelu[] = {0.0};
    static constexpr double kHard[] = {-1.0, 1.0};
    switch (kind_) {
      case ActivationKind::relu: return kRelu;
      case ActivationKind::hard_tanh: return kHard;
      default: return {};
    }
  }

  double operator()(double z) const noexcept { return eval(z); }

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  ActivationKind kind_;
};

/// Looks up "tanh", "identity", "relu" or "hard-tanh". Unknown names throw ConfigError.
const Activation& get_activation(std::string_view name);

std::vector<std::string> registered_activations();

}  // namespace miflow
