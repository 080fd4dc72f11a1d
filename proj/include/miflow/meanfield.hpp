#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "miflow/activations.hpp"
#include "miflow/quadrature.hpp"

namespace miflow {

/// Square feed-forward network with Gaussian weights N(0, sigma_w^2/width), biases N(0, sigma_b^2),
/// additive pre-activation noise N(0, sigma_n^2) and inputs N(0, sigma_x^2 I).
struct NetworkConfig {
  int width = 90;
  int depth = 17;
  double sigma_w = 1.0;
  double sigma_b = 0.0;
  double sigma_n = 0.1;
  double sigma_x = 1.0;
  std::string activation = "tanh";

  /// Throws ConfigError unless width, depth >= 1, sigma_n, sigma_x > 0, sigma_w, sigma_b >= 0
  /// and the activation is registered.
  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

}  // namespace miflow

namespace miflow::meanfield {

struct MeanFieldOptions {
  /// Evaluate the input/hidden correlation integral with q of the current layer inside phi
  /// instead of q of the previous layer.
  bool literal_e3_variance = false;
};

/// Layer variances q(1..L):
///   q(1) = sigma_w^2 sigma_x^2 + sigma_b^2 + sigma_n^2
///   q(l) = sigma_w^2 E[phi(sqrt(q(l-1)) z)^2] + sigma_b^2 + sigma_n^2
std::vector<double> q_forward(const NetworkConfig& cfg, const numerics::QuadratureRule& rule);

struct CrossCorrelation {
  double rho = 0.0;  // input/hidden correlation coefficient
  double s = 0.0;    // width * (input/hidden covariance)^2, the width-independent form
};

std::vector<CrossCorrelation> cross_correlation_forward(const NetworkConfig& cfg,
                                                        std::span<const double> q,
                                                        const numerics::QuadratureRule& rule,
                                                        MeanFieldOptions options = {});

struct ConditionalVariance {
  std::vector<double> q_c;
  bool singular = false;  // some q_c hit the 1e-300 floor
};

/// q_c(l) = q(l) - s(l) / sigma_x^2.
ConditionalVariance qc_compute(std::span<const double> q, std::span<const double> s, double sigma_x);

struct MeanFieldTrajectory {
  int width = 0;
  std::vector<double> q;
  std::vector<double> rho;
  std::vector<double> s;
  std::vector<double> q_c;
  std::vector<double> bound_per_unit;  // 0.5 * log(q / q_c), nats per coordinate
  bool singular = false;

  int depth() const noexcept { return static_cast<int>(q.size()); }
  /// Total bound (width/2) log(q/q_c) at 1-based layer.
  double bound(int layer) const { return width * bound_per_unit.at(static_cast<std::size_t>(layer - 1)); }
};

MeanFieldTrajectory analytic_mi_bound(const NetworkConfig& cfg, const numerics::QuadratureRule& rule,
                                      MeanFieldOptions options = {});
MeanFieldTrajectory analytic_mi_bound(const NetworkConfig& cfg);

// ---------------------------------------------------------------------------
// Edge of chaos. Everything below ignores sigma_n.

/// Large-depth fixed point of q = sigma_w^2 E[phi(sqrt(q) z)^2] + sigma_b^2.
double q_star(double sigma_w, double sigma_b, const Activation& phi, const numerics::QuadratureRule& rule);

/// chi_1 = sigma_w^2 E[phi'(sqrt(q) z)^2].
double chi1(double sigma_w, double q, const Activation& phi, const numerics::QuadratureRule& rule);

struct EocPoint {
  double sigma_w = 0.0;
  double sigma_b = 0.0;
  double q_star = 0.0;
  bool degenerate = false;  // chi_1 does not depend on sigma_b; every sigma_b is critical
};

/// Solves chi_1(sigma_w, sigma_b) = 1 for sigma_b in [0, 10]; nullopt when no root is bracketed.
std::optional<EocPoint> eoc_solve(double sigma_w, const Activation& phi, const numerics::QuadratureRule& rule);

enum class Phase { ordered, critical, chaotic };

std::string_view phase_name(Phase p) noexcept;

/// Ordered if chi_1 < 1 - tol, chaotic if chi_1 > 1 + tol, critical otherwise.
Phase classify_phase(double sigma_w, double sigma_b, const Activation& phi, const numerics::QuadratureRule& rule,
                     double tol = 1e-6);

struct EocCurve {
  std::vector<EocPoint> points;
};

/// eoc_solve over an increasing grid of positive sigma_w, skipping points without a root.
EocCurve eoc_curve(std::span<const double> sigma_w_grid, const Activation& phi, const numerics::QuadratureRule& rule);

}  // namespace miflow::meanfield
