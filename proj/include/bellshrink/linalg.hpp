#pragma once

#include <Eigen/Dense>

namespace bellshrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Lower Cholesky factor of a symmetric positive-definite matrix. If the
// plain factorization fails, 1e-10 * trace / dim is added to the diagonal
// once; a second failure throws SingularMatrixError naming the minor.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& a);

  Matrix solve(const Matrix& b) const;
  Vector solve(const Vector& b) const;
  Matrix inverse() const;

  const Matrix& lower() const noexcept { return lower_; }
  // True when the jitter retry was needed.
  bool jittered() const noexcept { return jittered_; }

 private:
  Matrix lower_;
  bool jittered_ = false;
};

// A^-1 B for SPD A.
Matrix spd_solve(const Matrix& a, const Matrix& b);
Vector spd_solve(const Matrix& a, const Vector& b);
Matrix spd_inverse(const Matrix& a);

// v' A^-1 v for SPD A.
double quad_form(const Vector& v, const Matrix& a);

}  // namespace bellshrink
