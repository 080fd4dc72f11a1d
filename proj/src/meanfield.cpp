#include "miflow/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "miflow/errors.hpp"

namespace miflow {

void NetworkConfig::validate() const {
  std::ostringstream os;
  if (width < 1) os << "width must be >= 1 (got " << width << "); ";
  if (depth < 1) os << "depth must be >= 1 (got " << depth << "); ";
  if (!(sigma_w >= 0.0) || !std::isfinite(sigma_w)) os << "sigma_w must be >= 0 (got " << sigma_w << "); ";
  if (!(sigma_b >= 0.0) || !std::isfinite(sigma_b)) os << "sigma_b must be >= 0 (got " << sigma_b << "); ";
  if (!(sigma_n > 0.0) || !std::isfinite(sigma_n)) os << "sigma_n must be > 0 (got " << sigma_n << "); ";
  if (!(sigma_x > 0.0) || !std::isfinite(sigma_x)) os << "sigma_x must be > 0 (got " << sigma_x << "); ";
  const std::string problems = os.str();
  if (!problems.empty()) throw ConfigError("invalid network config: " + problems.substr(0, problems.size() - 2));
  get_activation(activation);
}

}  // namespace miflow

namespace miflow::meanfield {

using numerics::expect_scaled;
using numerics::QuadratureRule;

namespace {

constexpr int kMinMeanFieldOrder = 32;
constexpr double kQcFloor = 1e-300;

void require_order(const QuadratureRule& rule) {
  if (rule.order() < kMinMeanFieldOrder) {
    std::ostringstream os;
    os << "mean-field propagation needs quadrature order >= " << kMinMeanFieldOrder << " (got " << rule.order() << ")";
    throw ConfigError(os.str());
  }
}

// sigma_w^2 E[phi(sqrt(q) z)^2]
double second_moment_map(double sigma_w, double q, const Activation& phi, const QuadratureRule& rule) {
  if (sigma_w == 0.0) return 0.0;
  const double a = std::sqrt(q);
  return sigma_w * sigma_w * expect_scaled(
                                   rule,
                                   [&](double u) {
                                     const double v = phi.eval(u);
                                     return v * v;
                                   },
                                   a, phi.kinks());
}

[[noreturn]] void rethrow_at_layer(const DomainError& e, int layer) {
  std::ostringstream os;
  os << "layer " << layer << ": " << e.what();
  throw DomainError(os.str());
}

}  // namespace

std::vector<double> q_forward(const NetworkConfig& cfg, const QuadratureRule& rule) {
  cfg.validate();
  require_order(rule);
  const Activation& phi = get_activation(cfg.activation);
  const double additive = cfg.sigma_b * cfg.sigma_b + cfg.sigma_n * cfg.sigma_n;

  std::vector<double> q(static_cast<std::size_t>(cfg.depth));
  q[0] = cfg.sigma_w * cfg.sigma_w * cfg.sigma_x * cfg.sigma_x + additive;
  for (int l = 1; l < cfg.depth; ++l) {
    try {
      q[l] = second_moment_map(cfg.sigma_w, q[l - 1], phi, rule) + additive;
    } catch (const DomainError& e) {
      rethrow_at_layer(e, l + 1);
    }
    if (!std::isfinite(q[l])) {
      std::ostringstream os;
      os << "layer " << l + 1 << ": variance q is not finite";
      throw DomainError(os.str());
    }
  }
  return q;
}

std::vector<CrossCorrelation> cross_correlation_forward(const NetworkConfig& cfg, std::span<const double> q,
                                                        const QuadratureRule& rule, MeanFieldOptions options) {
  cfg.validate();
  require_order(rule);
  if (q.size() != static_cast<std::size_t>(cfg.depth)) {
    throw ConfigError("cross_correlation_forward: q must have one entry per layer");
  }
  const Activation& phi = get_activation(cfg.activation);
  const double sw = cfg.sigma_w;
  const double sx = cfg.sigma_x;

  std::vector<CrossCorrelation> out(q.size());
  out[0].s = sw * sw * sx * sx * sx * sx;
  out[0].rho = sw * sx / std::sqrt(q[0]);

  for (std::size_t l = 1; l < q.size(); ++l) {
    const double r = std::clamp(out[l - 1].rho, -1.0, 1.0);
    const double a = std::sqrt(options.literal_e3_variance ? q[l] : q[l - 1]);
    double j = 0.0;
    if (sw != 0.0 && r != 0.0) {
      try {
        // E[z1 phi(a(r z1 + c z2))] = a r E[phi'(a z)] (Stein), so one dimension is enough
        j = a * r * expect_scaled(rule, [&](double u) { return phi.deriv(u); }, a, phi.kinks());
      } catch (const DomainError& e) {
        rethrow_at_layer(e, static_cast<int>(l) + 1);
      }
    }
    out[l].s = sw * sw * sx * sx * j * j;
    out[l].rho = sw * j / std::sqrt(q[l]);
    if (!(std::abs(out[l].rho) <= 1.0 + 1e-9)) {
      std::ostringstream os;
      os << "layer " << l + 1 << ": correlation " << out[l].rho
         << " outside [-1, 1]; quadrature is under-resolved or the configuration is inconsistent";
      throw DomainError(os.str());
    }
  }
  return out;
}

ConditionalVariance qc_compute(std::span<const double> q, std::span<const double> s, double sigma_x) {
  if (q.size() != s.size()) throw ConfigError("qc_compute: q and s differ in length");
  if (!(sigma_x > 0.0)) throw ConfigError("qc_compute: sigma_x must be > 0");

  ConditionalVariance out;
  out.q_c.resize(q.size());
  for (std::size_t l = 0; l < q.size(); ++l) {
    const double qc = q[l] - s[l] / (sigma_x * sigma_x);
    if (qc < -1e-8 * q[l]) {
      std::ostringstream os;
      os << "layer " << l + 1 << ": conditional variance " << qc << " is negative (q=" << q[l] << ")";
      throw InconsistencyError(os.str());
    }
    if (qc <= 0.0) {
      out.q_c[l] = kQcFloor;
      out.singular = true;
    } else {
      out.q_c[l] = qc;
    }
  }
  return out;
}

MeanFieldTrajectory analytic_mi_bound(const NetworkConfig& cfg, const QuadratureRule& rule,
                                      MeanFieldOptions options) {
  MeanFieldTrajectory t;
  t.width = cfg.width;
  t.q = q_forward(cfg, rule);
  const auto cc = cross_correlation_forward(cfg, t.q, rule, options);
  t.rho.reserve(cc.size());
  t.s.reserve(cc.size());
  for (const auto& c : cc) {
    t.rho.push_back(c.rho);
    t.s.push_back(c.s);
  }
  auto qc = qc_compute(t.q, t.s, cfg.sigma_x);
  t.q_c = std::move(qc.q_c);
  t.singular = qc.singular;
  t.bound_per_unit.resize(t.q.size());
  for (std::size_t l = 0; l < t.q.size(); ++l) t.bound_per_unit[l] = 0.5 * std::log(t.q[l] / t.q_c[l]);
  return t;
}

MeanFieldTrajectory analytic_mi_bound(const NetworkConfig& cfg) {
  return analytic_mi_bound(cfg, numerics::cached_rule(numerics::kDefaultQuadratureOrder));
}

// ---------------------------------------------------------------------------

double q_star(double sigma_w, double sigma_b, const Activation& phi, const QuadratureRule& rule) {
  if (!(sigma_w >= 0.0) || !(sigma_b >= 0.0)) throw ConfigError("q_star: sigma_w and sigma_b must be >= 0");
  constexpr int kMaxIter = 10000;
  constexpr double kTol = 1e-10;
  constexpr double kDiverged = 1e15;
  const double sb2 = sigma_b * sigma_b;
  auto map = [&](double q) { return second_moment_map(sigma_w, q, phi, rule) + sb2; };

  double q = sigma_w * sigma_w + sb2;
  double damping = 1.0;
  double prev_step = 0.0;
  for (int it = 0; it < kMaxIter; ++it) {
    const double target = map(q);
    const double step = target - q;
    if (std::abs(step) <= kTol * std::max(1.0, q)) return target;
    if (prev_step * step < 0.0) damping = 0.5;
    q += damping * step;
    prev_step = step;
    if (!std::isfinite(q) || q > kDiverged) {
      std::ostringstream os;
      os << "q* iteration diverges for (sigma_w, sigma_b) = (" << sigma_w << ", " << sigma_b << ")";
      throw FixedPointError(os.str(), q);
    }
  }

  // Critically slow convergence (e.g. tanh at (1, 0), where q -> 0 like 1/t). The map is
  // monotone in q for the registered activations, so bracket the root of map(q) - q below or
  // above the last iterate and bisect.
  auto g = [&](double x) { return map(x) - x; };
  double lo = q, hi = q;
  if (g(q) < 0.0) {
    while (g(lo) < 0.0) {
      lo *= 0.5;
      if (lo < 1e-300) return 0.0;
    }
  } else {
    while (g(hi) > 0.0) {
      hi *= 2.0;
      if (hi > kDiverged) {
        std::ostringstream os;
        os << "q* iteration did not converge for (sigma_w, sigma_b) = (" << sigma_w << ", " << sigma_b << ")";
        throw FixedPointError(os.str(), q);
      }
    }
  }
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double chi1(double sigma_w, double q, const Activation& phi, const QuadratureRule& rule) {
  const double a = std::sqrt(std::max(0.0, q));
  return sigma_w * sigma_w * expect_scaled(
                                   rule,
                                   [&](double u) {
                                     const double d = phi.deriv(u);
                                     return d * d;
                                   },
                                   a, phi.kinks());
}

std::optional<EocPoint> eoc_solve(double sigma_w, const Activation& phi, const QuadratureRule& rule) {
  if (!(sigma_w > 0.0) || !std::isfinite(sigma_w)) {
    std::ostringstream os;
    os << "eoc_solve: sigma_w must be > 0 (got " << sigma_w << ")";
    throw ConfigError(os.str());
  }
  constexpr double kTol = 1e-8;
  constexpr double kUpper = 10.0;

  if (phi.kind() == ActivationKind::identity) {
    // chi_1 = sigma_w^2 whatever sigma_b is.
    if (std::abs(sigma_w * sigma_w - 1.0) > 1e-12) return std::nullopt;
    return EocPoint{sigma_w, 0.0, q_star(sigma_w, 0.0, phi, rule), true};
  }

  auto residual = [&](double sb, double& qs) {
    qs = q_star(sigma_w, sb, phi, rule);
    return chi1(sigma_w, qs, phi, rule) - 1.0;
  };

  double q_lo = 0.0, q_hi = 0.0;
  double f_lo = residual(0.0, q_lo);
  if (std::abs(f_lo) <= kTol) return EocPoint{sigma_w, 0.0, q_lo, false};
  double f_hi = residual(kUpper, q_hi);
  if (std::abs(f_hi) <= kTol) return EocPoint{sigma_w, kUpper, q_hi, false};
  if ((f_lo > 0.0) == (f_hi > 0.0)) return std::nullopt;

  double lo = 0.0, hi = kUpper;
  double mid = 0.5 * (lo + hi), q_mid = 0.0;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double f_mid = residual(mid, q_mid);
    if (std::abs(f_mid) <= kTol || hi - lo < 1e-15) break;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return EocPoint{sigma_w, mid, q_mid, false};
}

std::string_view phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::ordered: return "ordered";
    case Phase::critical: return "critical";
    case Phase::chaotic: return "chaotic";
  }
  return "unknown";
}

Phase classify_phase(double sigma_w, double sigma_b, const Activation& phi, const QuadratureRule& rule, double tol) {
  const double c = chi1(sigma_w, q_star(sigma_w, sigma_b, phi, rule), phi, rule);
  if (c < 1.0 - tol) return Phase::ordered;
  if (c > 1.0 + tol) return Phase::chaotic;
  return Phase::critical;
}

EocCurve eoc_curve(std::span<const double> sigma_w_grid, const Activation& phi, const QuadratureRule& rule) {
  for (std::size_t i = 0; i < sigma_w_grid.size(); ++i) {
    if (!(sigma_w_grid[i] > 0.0) || (i > 0 && !(sigma_w_grid[i] > sigma_w_grid[i - 1]))) {
      throw ConfigError("eoc_curve: sigma_w grid must be positive and strictly increasing");
    }
  }
  EocCurve curve;
  for (const double sw : sigma_w_grid) {
    if (auto p = eoc_solve(sw, phi, rule)) curve.points.push_back(*p);
  }
  return curve;
}

}  // namespace miflow::meanfield
