#include "miflow/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "miflow/errors.hpp"
#include "miflow/parallel.hpp"

namespace miflow::montecarlo {

using numerics::LogDet;
using numerics::logdet_spd;
using numerics::RandomStream;
using numerics::SeedSpec;
using numerics::SpdMatrix;

namespace {

constexpr Eigen::Index kBlock = 1024;

void apply_activation(const Activation& phi, Eigen::MatrixXd& m) {
  switch (phi.kind()) {
    case ActivationKind::identity: return;
    case ActivationKind::tanh: {
      // sign(z) (1 - e) / (1 + e) with e = exp(-2|z|); Eigen vectorises exp but not tanh.
      const Eigen::ArrayXXd e = (-2.0 * m.array().abs()).exp();
      m = ((1.0 - e) / (1.0 + e)) * m.array().sign();
      return;
    }
    case ActivationKind::relu: m = m.cwiseMax(0.0); return;
    case ActivationKind::hard_tanh: m = m.cwiseMax(-1.0).cwiseMin(1.0); return;
  }
}

Eigen::MatrixXd symmetric_from_lower(const Eigen::MatrixXd& lower) {
  Eigen::MatrixXd full = lower.selfadjointView<Eigen::Lower>();
  return full;
}

Eigen::MatrixXd conditional_block(const Eigen::LLT<Eigen::MatrixXd>& lx, const Eigen::MatrixXd& ly,
                                  const Eigen::MatrixXd& lxy) {
  Eigen::MatrixXd c = ly - lxy.transpose() * lx.solve(lxy);
  return 0.5 * (c + c.transpose());
}

Eigen::LLT<Eigen::MatrixXd> factor_x(const SpdMatrix& lambda_x) {
  Eigen::LLT<Eigen::MatrixXd> llt(lambda_x.matrix());
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("input covariance Lambda_x is not positive definite", 0.0);
  }
  return llt;
}

void check_blocks(Eigen::Index dx, Eigen::Index dy, const Eigen::MatrixXd& lxy) {
  if (lxy.rows() != dx || lxy.cols() != dy) {
    std::ostringstream os;
    os << "cross-covariance block is " << lxy.rows() << "x" << lxy.cols() << ", expected " << dx << "x" << dy;
    throw ConfigError(os.str());
  }
}

GaussianMi finish_mi(const SpdMatrix& lambda_y, Eigen::MatrixXd conditional) {
  const LogDet ld_y = logdet_spd(lambda_y);
  const LogDet ld_c = logdet_spd(SpdMatrix(std::move(conditional)));
  GaussianMi out;
  out.logdet_y = ld_y.value;
  out.logdet_conditional = ld_c.value;
  out.value = 0.5 * (ld_y.value - ld_c.value);
  out.jitter_events = int(ld_y.jittered) + int(ld_c.jittered);
  return out;
}

}  // namespace

NetworkRealisation sample_network(const NetworkConfig& cfg, SeedSpec seed) {
  cfg.validate();
  const Eigen::Index n = cfg.width;
  NetworkRealisation net;
  net.seed = seed;
  net.weights.reserve(static_cast<std::size_t>(cfg.depth));
  net.biases.reserve(static_cast<std::size_t>(cfg.depth));
  const double w_std = cfg.sigma_w / std::sqrt(static_cast<double>(n));
  for (int l = 0; l < cfg.depth; ++l) {
    RandomStream rs(seed.child(static_cast<std::uint64_t>(l)));
    Eigen::MatrixXd w(n, n);
    rs.fill_normal(w, w_std);
    Eigen::MatrixXd b(n, 1);
    rs.fill_normal(b, cfg.sigma_b);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(b.col(0));
  }
  return net;
}

std::vector<Eigen::VectorXd> propagate(const NetworkRealisation& net, const NetworkConfig& cfg,
                                       const Eigen::VectorXd& x, std::span<const Eigen::VectorXd> noise) {
  const Eigen::Index n = cfg.width;
  const auto depth = static_cast<std::size_t>(cfg.depth);
  if (net.weights.size() != depth || net.biases.size() != depth || noise.size() != depth || x.size() != n) {
    throw ConfigError("propagate: dimensions of realisation, input or noise do not match the config");
  }
  const Activation& phi = get_activation(cfg.activation);
  std::vector<Eigen::VectorXd> h;
  h.reserve(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    if (net.weights[l].rows() != n || net.weights[l].cols() != n || net.biases[l].size() != n ||
        noise[l].size() != n) {
      throw ConfigError("propagate: layer dimensions do not match the config");
    }
    Eigen::VectorXd in = l == 0 ? x : h.back().unaryExpr([&](double v) { return phi.eval(v); }).eval();
    h.emplace_back(net.weights[l] * in + net.biases[l] + noise[l]);
  }
  return h;
}

CovarianceBatch estimate_covariances(const NetworkRealisation& net, const NetworkConfig& cfg, std::size_t samples,
                                     SeedSpec seed) {
  cfg.validate();
  const Eigen::Index n = cfg.width;
  const int depth = cfg.depth;
  if (samples < static_cast<std::size_t>(n) + 1) {
    std::ostringstream os;
    os << "need at least width + 1 = " << n + 1 << " input samples (got " << samples << ")";
    throw ConfigError(os.str());
  }
  if (net.weights.size() != static_cast<std::size_t>(depth)) {
    throw ConfigError("estimate_covariances: realisation depth does not match the config");
  }
  const Activation& phi = get_activation(cfg.activation);
  RandomStream rs(seed);

  Eigen::VectorXd sum_x = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd m_xx = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::VectorXd> sum_h(depth, Eigen::VectorXd::Zero(n));
  std::vector<Eigen::MatrixXd> m_hh(depth, Eigen::MatrixXd::Zero(n, n));
  std::vector<Eigen::MatrixXd> m_xh(depth, Eigen::MatrixXd::Zero(n, n));

  Eigen::MatrixXd x, h, act, noise;
  std::size_t done = 0;
  while (done < samples) {
    const Eigen::Index b = static_cast<Eigen::Index>(std::min<std::size_t>(kBlock, samples - done));
    x.resize(n, b);
    rs.fill_normal(x, cfg.sigma_x);
    sum_x += x.rowwise().sum();
    m_xx.selfadjointView<Eigen::Lower>().rankUpdate(x);
    noise.resize(n, b);
    for (int l = 0; l < depth; ++l) {
      rs.fill_normal(noise, cfg.sigma_n);
      if (l == 0) {
        h.noalias() = net.weights[0] * x;
      } else {
        act = h;
        apply_activation(phi, act);
        h.noalias() = net.weights[l] * act;
      }
      h.colwise() += net.biases[l];
      h += noise;
      sum_h[l] += h.rowwise().sum();
      m_hh[l].selfadjointView<Eigen::Lower>().rankUpdate(h);
      m_xh[l].noalias() += x * h.transpose();
    }
    done += static_cast<std::size_t>(b);
  }

  const double inv_s = 1.0 / static_cast<double>(samples);
  const Eigen::VectorXd mean_x = sum_x * inv_s;
  Eigen::MatrixXd lambda_x = symmetric_from_lower(m_xx) * inv_s - mean_x * mean_x.transpose();

  CovarianceBatch batch{SpdMatrix(std::move(lambda_x)), {}};
  batch.layers.reserve(static_cast<std::size_t>(depth));
  for (int l = 0; l < depth; ++l) {
    const Eigen::VectorXd mean_h = sum_h[l] * inv_s;
    Eigen::MatrixXd lambda_h = symmetric_from_lower(m_hh[l]) * inv_s - mean_h * mean_h.transpose();
    Eigen::MatrixXd sigma_xh = m_xh[l] * inv_s - mean_x * mean_h.transpose();
    batch.layers.push_back({l + 1, SpdMatrix(std::move(lambda_h)), std::move(sigma_xh), mean_h, samples});
  }
  return batch;
}

GaussianMi gaussian_mi(const SpdMatrix& lambda_x, const SpdMatrix& lambda_y, const Eigen::MatrixXd& lambda_xy) {
  check_blocks(lambda_x.dim(), lambda_y.dim(), lambda_xy);
  const auto llt = factor_x(lambda_x);
  return finish_mi(lambda_y, conditional_block(llt, lambda_y.matrix(), lambda_xy));
}

GaussianMi gaussian_mi(double variance_x, const SpdMatrix& lambda_y, const Eigen::MatrixXd& lambda_xy) {
  if (!(variance_x > 0.0)) throw ConfigError("gaussian_mi: input variance must be > 0");
  check_blocks(lambda_xy.rows(), lambda_y.dim(), lambda_xy);
  Eigen::MatrixXd c = lambda_y.matrix() - (lambda_xy.transpose() * lambda_xy) / variance_x;
  return finish_mi(lambda_y, 0.5 * (c + c.transpose()));
}

namespace {

struct DrawResult {
  std::vector<double> logdet_h;
  std::vector<double> logdet_c;
  std::vector<double> bound;
  std::vector<double> diag_q;
  std::vector<double> diag_qc;
  int jitter_events = 0;
};

double mean_of(const std::vector<DrawResult>& draws, std::vector<double> DrawResult::*field, std::size_t l) {
  double acc = 0.0;
  for (const auto& d : draws) acc += (d.*field)[l];
  return acc / static_cast<double>(draws.size());
}

double stderr_of(const std::vector<DrawResult>& draws, std::vector<double> DrawResult::*field, std::size_t l,
                 double mean) {
  const std::size_t w = draws.size();
  if (w < 2) return 0.0;
  double ss = 0.0;
  for (const auto& d : draws) {
    const double dv = (d.*field)[l] - mean;
    ss += dv * dv;
  }
  return std::sqrt(ss / static_cast<double>(w - 1) / static_cast<double>(w));
}

}  // namespace

MIBoundSeries sampled_mi_bound(const NetworkConfig& cfg, int weight_draws, std::size_t samples, SeedSpec seed,
                               unsigned workers) {
  cfg.validate();
  if (weight_draws < 1) throw ConfigError("sampled_mi_bound: need at least one weight draw");
  if (samples < static_cast<std::size_t>(cfg.width) + 1) {
    std::ostringstream os;
    os << "sampled_mi_bound: need at least width + 1 = " << cfg.width + 1 << " input samples (got " << samples << ")";
    throw ConfigError(os.str());
  }
  const auto depth = static_cast<std::size_t>(cfg.depth);
  std::vector<DrawResult> draws(static_cast<std::size_t>(weight_draws));

  parallel_for(draws.size(), workers, [&](std::size_t d) {
    const auto net = sample_network(cfg, seed.child(2 * d));
    const auto batch = estimate_covariances(net, cfg, samples, seed.child(2 * d + 1));
    const auto llt = factor_x(batch.lambda_x);
    DrawResult& r = draws[d];
    r.logdet_h.resize(depth);
    r.logdet_c.resize(depth);
    r.bound.resize(depth);
    r.diag_q.resize(depth);
    r.diag_qc.resize(depth);
    for (std::size_t l = 0; l < depth; ++l) {
      const auto& est = batch.layers[l];
      try {
        Eigen::MatrixXd cond = conditional_block(llt, est.lambda_h.matrix(), est.sigma_xh);
        const double mean_sq = est.mean_h.squaredNorm() / static_cast<double>(cfg.width);
        r.diag_q[l] = est.lambda_h.matrix().diagonal().mean() + mean_sq;
        r.diag_qc[l] = cond.diagonal().mean() + mean_sq;
        const GaussianMi mi = finish_mi(est.lambda_h, std::move(cond));
        r.logdet_h[l] = mi.logdet_y;
        r.logdet_c[l] = mi.logdet_conditional;
        r.bound[l] = mi.value;
        r.jitter_events += mi.jitter_events;
      } catch (const SingularMatrixError& e) {
        std::ostringstream os;
        os << "weight draw " << d << ", layer " << l + 1 << ": " << e.what();
        throw SingularMatrixError(os.str(), e.smallest_pivot());
      } catch (const NumericalError& e) {
        std::ostringstream os;
        os << "weight draw " << d << ", layer " << l + 1 << ": " << e.what();
        throw NumericalError(os.str());
      }
    }
  });

  MIBoundSeries out;
  out.weight_draws = weight_draws;
  out.input_samples = samples;
  for (const auto& d : draws) out.jitter_events += d.jitter_events;
  out.sampled_bound.resize(depth);
  out.e1.resize(depth);
  out.e2.resize(depth);
  out.stderr_bound.resize(depth);
  out.diag_q.resize(depth);
  out.diag_q_stderr.resize(depth);
  out.diag_qc.resize(depth);
  out.diag_qc_stderr.resize(depth);

  for (std::size_t l = 0; l < depth; ++l) {
    out.e1[l] = mean_of(draws, &DrawResult::logdet_h, l);
    out.e2[l] = -0.5 * mean_of(draws, &DrawResult::logdet_c, l);
    out.sampled_bound[l] = 0.5 * out.e1[l] + out.e2[l];
    out.stderr_bound[l] = stderr_of(draws, &DrawResult::bound, l, mean_of(draws, &DrawResult::bound, l));
    out.diag_q[l] = mean_of(draws, &DrawResult::diag_q, l);
    out.diag_q_stderr[l] = stderr_of(draws, &DrawResult::diag_q, l, out.diag_q[l]);
    out.diag_qc[l] = mean_of(draws, &DrawResult::diag_qc, l);
    out.diag_qc_stderr[l] = stderr_of(draws, &DrawResult::diag_qc, l, out.diag_qc[l]);
  }
  return out;
}

}  // namespace miflow::montecarlo
