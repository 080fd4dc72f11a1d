#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "miflow/activations.hpp"
#include "miflow/errors.hpp"

using namespace miflow;

TEST_CASE("registry lookups") {
  CHECK(get_activation("tanh").eval(1.0) == doctest::Approx(0.761594).epsilon(1e-6));
  CHECK(get_activation("identity").deriv(-3.2) == 1.0);
  CHECK(get_activation("relu").eval(-2.0) == 0.0);
  CHECK(get_activation("hard-tanh").eval(3.0) == 1.0);
  CHECK(get_activation("tanh").name() == "tanh");
  CHECK(registered_activations() == std::vector<std::string>{"tanh", "identity", "relu", "hard-tanh"});
}

TEST_CASE("unknown names list the registered ones") {
  try {
    get_activation("sigmoid");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& name : registered_activations()) CHECK(msg.find(name) != std::string::npos);
  }
}

TEST_CASE("derivatives match central differences") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  constexpr double h = 1e-5;
  for (const auto& name : registered_activations()) {
    const Activation& phi = get_activation(name);
    int checked = 0;
    while (checked < 100) {
      const double z = u(rng);
      const bool near_kink = (name == "relu" && std::abs(z) < 2 * h) ||
                             (name == "hard-tanh" && std::abs(std::abs(z) - 1.0) < 2 * h);
      if (near_kink) continue;
      const double fd = (phi.eval(z + h) - phi.eval(z - h)) / (2 * h);
      INFO(name << " at " << z);
      CHECK(std::abs(fd - phi.deriv(z)) < 1e-6);
      ++checked;
    }
  }
}

TEST_CASE("kink conventions") {
  CHECK(get_activation("relu").deriv(0.0) == 0.0);
  CHECK(get_activation("hard-tanh").deriv(1.0) == 0.0);
  CHECK(get_activation("hard-tanh").deriv(-1.0) == 0.0);
  CHECK(get_activation("hard-tanh").deriv(0.999) == 1.0);
}

TEST_CASE("zero at zero, contractive, odd") {
  for (const auto& name : registered_activations()) CHECK(get_activation(name).eval(0.0) == 0.0);
  for (int i = -500; i <= 500; ++i) {
    const double z = i * 0.02;
    for (const char* name : {"tanh", "hard-tanh"}) CHECK(std::abs(get_activation(name).eval(z)) <= std::abs(z));
    for (const char* name : {"tanh", "identity", "hard-tanh"}) {
      const Activation& phi = get_activation(name);
      CHECK(std::abs(phi.eval(-z) + phi.eval(z)) <= 1e-12);
    }
  }
}
