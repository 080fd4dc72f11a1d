#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "miflow/errors.hpp"

namespace miflow::numerics {

inline constexpr int kDefaultQuadratureOrder = 64;
inline constexpr int kMinQuadratureOrder = 2;
inline constexpr int kMaxQuadratureOrder = 512;

/// Gauss-Hermite rule against the standard normal density:
/// sum_i weights[i] * f(nodes[i]) approximates E[f(Z)], Z ~ N(0, 1).
/// Nodes are strictly increasing and symmetric about zero; weights sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int order() const noexcept { return static_cast<int>(nodes.size()); }
};

/// Builds the rule of the given order (2..512). Exact for polynomials of degree <= 2*order-1.
QuadratureRule gauss_hermite_rule(int order);

/// Process-wide cache of rules keyed by order; safe to call concurrently.
const QuadratureRule& cached_rule(int order);

namespace detail {
[[noreturn]] void throw_non_finite_1d(double node, double value);
[[noreturn]] void throw_non_finite_2d(double z1, double z2, double value);
}  // namespace detail

template <typename F>
double integrate_1d(const QuadratureRule& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) detail::throw_non_finite_1d(rule.nodes[i], v);
    acc += rule.weights[i] * v;
  }
  return acc;
}

/// Tensor-product rule: sum_i sum_j w_i w_j f(z_i, z_j) ~ E[f(Z1, Z2)] for independent standard normals.
template <typename F>
double integrate_2d(const QuadratureRule& rule, F&& f) {
  const std::size_t m = rule.nodes.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double v = f(rule.nodes[i], rule.nodes[j]);
      if (!std::isfinite(v)) detail::throw_non_finite_2d(rule.nodes[i], rule.nodes[j], v);
      inner += rule.weights[j] * v;
    }
    acc += rule.weights[i] * inner;
  }
  return acc;
}

/// True when the rule's central node spacing resolves structure of width 1/scale, i.e. when
/// E[g(scale * Z)] for a smooth, unit-scale g (tanh and friends) is accurate to about 1e-12.
bool resolves(const QuadratureRule& rule, double scale) noexcept;

/// E[g(scale * Z)] for Z ~ N(0, 1), where g varies on a unit scale and may have kinks at `kinks`.
/// Uses the Gauss-Hermite rule while it resolves the integrand. Otherwise the line is cut at the
/// kinks and at a few multiples of 1/scale and each piece goes to adaptive Gauss-Kronrod.
template <typename G>
double expect_scaled(const QuadratureRule& rule, G&& g, double scale, std::span<const double> kinks = {}) {
  if (kinks.empty() && resolves(rule, scale)) return integrate_1d(rule, [&](double z) { return g(scale * z); });

  constexpr double kTail = 14.0;  // phi(14) ~ 1e-43
  std::vector<double> cuts{-kTail, 0.0, kTail};
  auto add = [&](double z) {
    if (std::abs(z) < kTail) cuts.push_back(z);
  };
  for (double c : {1.0, 4.0, 16.0, 64.0}) {
    add(c / scale);
    add(-c / scale);
  }
  for (double k : kinks) add(k / scale);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto f = [&](double z) {
    const double v = g(scale * z);
    if (!std::isfinite(v)) detail::throw_non_finite_1d(z, v);
    return v * norm * std::exp(-0.5 * z * z);
  };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-13);
  }
  return acc;
}

}  // namespace miflow::numerics
