#include "miflow/linalg.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "miflow/errors.hpp"

namespace miflow::numerics {

SpdMatrix::SpdMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) {
    std::ostringstream os;
    os << "SPD matrix must be square and non-empty, got " << m_.rows() << "x" << m_.cols();
    throw ConfigError(os.str());
  }
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale)) {
    std::ostringstream os;
    os << "matrix is not symmetric (max |m - m^T| = " << asym << ")";
    throw ConfigError(os.str());
  }
}

namespace {

bool try_logdet(const Eigen::MatrixXd& m, double& out) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) return false;
    acc += std::log(diag(i));
  }
  out = 2.0 * acc;
  return true;
}

}  // namespace

LogDet logdet_spd(const SpdMatrix& m) {
  double value = 0.0;
  if (try_logdet(m.matrix(), value)) return {value, false};

  const double dim = static_cast<double>(m.dim());
  const double jitter = 1e-10 * m.matrix().trace() / dim;
  Eigen::MatrixXd jittered = m.matrix();
  if (jitter > 0.0) jittered.diagonal().array() += jitter;
  if (jitter > 0.0 && try_logdet(jittered, value)) return {value, true};

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(jittered);
  const double pivot = ldlt.vectorD().minCoeff();
  std::ostringstream os;
  os << "matrix is not positive definite after jitter " << jitter << " (smallest pivot " << pivot << ")";
  throw SingularMatrixError(os.str(), pivot);
}

}  // namespace miflow::numerics
