#pragma once

#include <Eigen/Core>

namespace miflow::numerics {

/// Symmetric positive (semi-)definite matrix. Construction checks shape and symmetry
/// (relative tolerance 1e-10); definiteness is only discovered by factorising.
class SpdMatrix {
 public:
  explicit SpdMatrix(Eigen::MatrixXd m);

  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

 private:
  Eigen::MatrixXd m_;
};

struct LogDet {
  double value = 0.0;
  bool jittered = false;  // the diagonal jitter retry was needed
};

/// log|m| from a Cholesky factorisation. If the first factorisation fails, retries once with
/// 1e-10 * trace(m) / dim added to the diagonal; throws SingularMatrixError if that fails too.
LogDet logdet_spd(const SpdMatrix& m);

}  // namespace miflow::numerics
