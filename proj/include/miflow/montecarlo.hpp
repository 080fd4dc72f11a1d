#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "miflow/linalg.hpp"
#include "miflow/meanfield.hpp"
#include "miflow/random.hpp"

namespace miflow::montecarlo {

/// One draw of all weights and biases of a network. Layer l (0-based) maps R^width -> R^width.
struct NetworkRealisation {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  numerics::SeedSpec seed;
};

/// Weights and biases of layer l come from seed.child(l), so changing depth keeps the
/// shallower layers intact.
NetworkRealisation sample_network(const NetworkConfig& cfg, numerics::SeedSpec seed);

/// h(1) = W(1) x + b(1) + n(1); h(l) = W(l) phi(h(l-1)) + b(l) + n(l).
std::vector<Eigen::VectorXd> propagate(const NetworkRealisation& net, const NetworkConfig& cfg,
                                       const Eigen::VectorXd& x, std::span<const Eigen::VectorXd> noise);

/// Empirical second-order statistics of (X, h(l)) for a fixed realisation, normalised by 1/S
/// and taken about the empirical means.
struct CovarianceEstimate {
  int layer = 0;                // 1-based
  numerics::SpdMatrix lambda_h;  // Cov(h)
  Eigen::MatrixXd sigma_xh;      // Cov(X, h), rows index X
  Eigen::VectorXd mean_h;
  std::size_t samples = 0;
};

struct CovarianceBatch {
  numerics::SpdMatrix lambda_x;  // Cov(X), shared by all layers
  std::vector<CovarianceEstimate> layers;
};

/// Streams S inputs and noises through the network and accumulates every layer's covariance
/// blocks in one pass. Requires S >= width + 1.
CovarianceBatch estimate_covariances(const NetworkRealisation& net, const NetworkConfig& cfg, std::size_t samples,
                                     numerics::SeedSpec seed);

struct GaussianMi {
  double value = 0.0;
  double logdet_y = 0.0;            // log|Lambda_y|
  double logdet_conditional = 0.0;  // log|Lambda_y - Lambda_xy^T Lambda_x^-1 Lambda_xy|
  int jitter_events = 0;
};

/// Mutual information of a jointly Gaussian pair via the block-determinant identity:
/// 0.5 * (log|Lambda_y| - log|Lambda_y - Lambda_xy^T Lambda_x^-1 Lambda_xy|).
GaussianMi gaussian_mi(const numerics::SpdMatrix& lambda_x, const numerics::SpdMatrix& lambda_y,
                       const Eigen::MatrixXd& lambda_xy);

/// Same, for Lambda_x = variance_x * I (the inverse is a scalar division).
GaussianMi gaussian_mi(double variance_x, const numerics::SpdMatrix& lambda_y, const Eigen::MatrixXd& lambda_xy);

/// Per-layer Gaussian lower bound averaged over weight draws.
struct MIBoundSeries {
  std::vector<double> sampled_bound;  // 0.5 * e1 + e2, nats
  std::vector<double> e1;             // mean of log|Lambda_h|
  std::vector<double> e2;             // -0.5 * mean of log|Lambda_h - Sigma^T Lambda_x^-1 Sigma|
  std::vector<double> stderr_bound;   // standard error of sampled_bound across draws
  int weight_draws = 0;
  std::size_t input_samples = 0;
  int jitter_events = 0;

  // Mean diagonals of the second-moment matrices E[h h^T] and E[h h^T] - Sigma^T Lambda_x^-1 Sigma,
  // averaged over draws, with their standard errors. These are the quantities the mean-field
  // q and q_c describe.
  std::vector<double> diag_q;
  std::vector<double> diag_q_stderr;
  std::vector<double> diag_qc;
  std::vector<double> diag_qc_stderr;

  int depth() const noexcept { return static_cast<int>(sampled_bound.size()); }
  friend bool operator==(const MIBoundSeries&, const MIBoundSeries&) = default;
};

/// Draw d uses seed.child(2d) for weights and seed.child(2d + 1) for inputs and noise; draws are
/// spread over `workers` threads (0 = hardware concurrency) and the result does not depend on it.
MIBoundSeries sampled_mi_bound(const NetworkConfig& cfg, int weight_draws, std::size_t samples,
                               numerics::SeedSpec seed, unsigned workers = 1);

}  // namespace miflow::montecarlo
