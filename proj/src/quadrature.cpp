#include "miflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace miflow::numerics {

namespace {

struct HermiteEval {
  double p_n = 0.0;      // orthonormal He_n(x) / sqrt(n!)
  double p_nm1 = 0.0;    // same, degree n-1
  double sum_sq = 0.0;   // sum_{k<n} p_k(x)^2
};

// Orthonormal probabilists' Hermite recurrence:
//   p_0 = 1, p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1).
HermiteEval eval_orthonormal(int n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  double sum_sq = 1.0;
  for (int k = 0; k < n; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(k + 1.0);
    prev = cur;
    cur = next;
    if (k + 1 < n) sum_sq += cur * cur;
  }
  return {cur, prev, sum_sq};
}

}  // namespace

namespace detail {

void throw_non_finite_1d(double node, double value) {
  std::ostringstream os;
  os << "integrand is not finite (" << value << ") at quadrature node z=" << node;
  throw DomainError(os.str());
}

void throw_non_finite_2d(double z1, double z2, double value) {
  std::ostringstream os;
  os << "integrand is not finite (" << value << ") at quadrature node (z1=" << z1 << ", z2=" << z2 << ")";
  throw DomainError(os.str());
}

}  // namespace detail

QuadratureRule gauss_hermite_rule(int order) {
  if (order < kMinQuadratureOrder || order > kMaxQuadratureOrder) {
    std::ostringstream os;
    os << "quadrature order " << order << " outside [" << kMinQuadratureOrder << ", " << kMaxQuadratureOrder << "]";
    throw ConfigError(os.str());
  }

  // Golub-Welsch: eigenvalues of the Jacobi matrix are the nodes.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order - 1);
  for (int k = 1; k < order; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw DomainError("Gauss-Hermite eigenvalue problem did not converge");

  std::vector<double> x(order), w(order);
  for (int i = 0; i < order; ++i) {
    double xi = eig.eigenvalues()(i);
    // Two Newton polishes on p_n; p_n' = sqrt(n) p_{n-1}.
    for (int it = 0; it < 2; ++it) {
      const HermiteEval e = eval_orthonormal(order, xi);
      const double step = e.p_n / (std::sqrt(static_cast<double>(order)) * e.p_nm1);
      if (!std::isfinite(step)) break;
      xi -= step;
    }
    const HermiteEval e = eval_orthonormal(order, xi);
    x[i] = xi;
    if (std::isfinite(e.sum_sq) && e.sum_sq > 0.0) {
      w[i] = 1.0 / e.sum_sq;  // Christoffel weight
    } else {
      const double v0 = eig.eigenvectors()(0, i);
      w[i] = v0 * v0;
    }
  }

  // Enforce exact symmetry.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double node = 0.5 * (x[j] - x[i]);
    const double weight = 0.5 * (w[i] + w[j]);
    x[i] = -node;
    x[j] = node;
    w[i] = w[j] = weight;
  }
  if (order % 2 == 1) x[order / 2] = 0.0;

  // Normalise, summing the small tail weights first.
  double total = 0.0;
  for (int i = 0; i < order / 2; ++i) total += w[i] + w[order - 1 - i];
  if (order % 2 == 1) total += w[order / 2];
  for (double& wi : w) wi /= total;

  for (int i = 1; i < order; ++i) {
    if (!(x[i] > x[i - 1])) throw DomainError("Gauss-Hermite nodes are not strictly increasing");
  }
  return {std::move(x), std::move(w)};
}

const QuadratureRule& cached_rule(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<QuadratureRule>(gauss_hermite_rule(order));
  return *slot;
}

bool resolves(const QuadratureRule& rule, double scale) noexcept {
  const int m = rule.order();
  if (m < 2) return false;
  const double gap = rule.nodes[m / 2] - rule.nodes[m / 2 - 1];
  // 0.25 keeps tanh^2 and sech^4 errors near 1e-12 for every order we tried
  return scale * gap <= 0.25;
}

}  // namespace miflow::numerics
