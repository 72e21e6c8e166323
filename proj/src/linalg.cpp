#include "bellshrink/linalg.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "bellshrink/errors.hpp"

namespace bellshrink {

namespace {

// Returns the factor, or the 1-based index of the failing leading minor.
std::optional<Matrix> factor(const Matrix& a, Eigen::Index& failed_minor) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      failed_minor = j + 1;
      return std::nullopt;
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

}  // namespace

Cholesky::Cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("Cholesky requires a square matrix, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  Eigen::Index failed = 0;
  if (auto l = factor(a, failed)) {
    lower_ = std::move(*l);
    return;
  }
  const double n = static_cast<double>(a.rows());
  const double jitter = 1e-10 * a.trace() / n;
  Matrix shifted = a;
  if (jitter > 0.0) shifted.diagonal().array() += jitter;
  if (auto l = factor(shifted, failed)) {
    lower_ = std::move(*l);
    jittered_ = true;
    return;
  }
  throw SingularMatrixError("matrix is not positive definite: leading minor of order " +
                                std::to_string(failed) + " is non-positive",
                            failed);
}

Matrix Cholesky::solve(const Matrix& b) const {
  if (b.rows() != lower_.rows()) {
    throw std::invalid_argument("Cholesky::solve dimension mismatch");
  }
  const auto l = lower_.triangularView<Eigen::Lower>();
  Matrix x = l.solve(b);
  return l.transpose().solve(x);
}

Vector Cholesky::solve(const Vector& b) const {
  return solve(Matrix(b)).col(0);
}

Matrix Cholesky::inverse() const {
  Matrix inv = solve(Matrix(Matrix::Identity(lower_.rows(), lower_.rows())));
  return 0.5 * (inv + inv.transpose());
}

Matrix spd_solve(const Matrix& a, const Matrix& b) { return Cholesky(a).solve(b); }

Vector spd_solve(const Matrix& a, const Vector& b) { return Cholesky(a).solve(b); }

Matrix spd_inverse(const Matrix& a) { return Cholesky(a).inverse(); }

double quad_form(const Vector& v, const Matrix& a) {
  if (v.size() != a.rows()) throw std::invalid_argument("quad_form dimension mismatch");
  // ||L^-1 v||^2 is non-negative by construction.
  const Cholesky chol(a);
  const Vector z = chol.lower().triangularView<Eigen::Lower>().solve(v);
  return z.squaredNorm();
}

}  // namespace bellshrink
