#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bellshrink/linalg.hpp"

namespace bellshrink {

// Design matrix with a leading intercept column plus a vector of
// non-negative integer counts.
class Dataset {
 public:
  Dataset(Matrix design, Vector response);

  const Matrix& design() const noexcept { return design_; }
  const Vector& response() const noexcept { return response_; }
  Eigen::Index rows() const noexcept { return design_.rows(); }
  Eigen::Index coefficients() const noexcept { return design_.cols(); }

  // sum_i [ln B_{y_i} - ln y_i!], the beta-free part of the log-likelihood.
  double log_normalizer() const noexcept { return log_normalizer_; }

  // Rows selected by index; repeats allowed.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  Matrix design_;
  Vector response_;
  double log_normalizer_ = 0.0;
};

struct FitOptions {
  double tolerance = 1e-8;  // on max |delta beta|
  int max_iterations = 100;
  int max_halvings = 10;
  double eta_clamp = 30.0;
};

struct FittedModel {
  Vector beta;
  Matrix fisher_info;  // X' V X at beta, V = diag(mu / (1 + theta))
  double loglik = 0.0;
  int n_iter = 0;
  bool converged = false;
  int n_clamped = 0;       // linear-predictor clamp events during iterations
  bool jittered = false;   // Fisher solve needed the diagonal jitter retry
};

// Log-likelihood under the log link mu = exp(x'beta), theta = W0(mu).
double loglik(const Vector& beta, const Dataset& data);

// Gradient of loglik: X' [(y - mu) / (1 + theta)].
Vector score(const Vector& beta, const Dataset& data);

// Expected information X' diag(mu / (1 + theta)) X.
Matrix fisher_information(const Vector& beta, const Dataset& data);

// Fisher scoring from an OLS start on ln(y + 0.5), with step halving.
// Non-convergence is reported through FittedModel::converged.
FittedModel fit(const Dataset& data, const FitOptions& opts = {});

double aic(const FittedModel& model);

}  // namespace bellshrink
