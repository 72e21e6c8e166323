#include "bellshrink/bell_glm.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "bellshrink/errors.hpp"
#include "bellshrink/special_fn.hpp"

namespace bellshrink {

namespace {

double log_normalizer_of(const Vector& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto yi = static_cast<std::uint64_t>(y[i]);
    total += log_bell(yi) - std::lgamma(y[i] + 1.0);
  }
  return total;
}

struct LinkState {
  Vector eta;
  Vector mu;
  Vector theta;
  int clamped = 0;
};

LinkState link_state(const Vector& beta, const Dataset& data, double clamp) {
  LinkState s;
  s.eta = data.design() * beta;
  s.mu.resize(s.eta.size());
  s.theta.resize(s.eta.size());
  for (Eigen::Index i = 0; i < s.eta.size(); ++i) {
    double eta = s.eta[i];
    if (!std::isfinite(eta)) {
      throw NumericalError("non-finite linear predictor at row " + std::to_string(i + 1));
    }
    if (std::fabs(eta) > clamp) {
      eta = std::copysign(clamp, eta);
      s.eta[i] = eta;
      ++s.clamped;
    }
    s.mu[i] = std::exp(eta);
    s.theta[i] = lambert_w0(s.mu[i]);
  }
  return s;
}

// sum_i y_i ln theta_i + 1 - e^theta_i, using e^theta = mu / theta.
double kernel(const LinkState& s, const Vector& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double theta = s.theta[i];
    const double e_theta = theta > 0.0 ? s.mu[i] / theta : 1.0;
    total += (y[i] > 0.0 ? y[i] * std::log(theta) : 0.0) + 1.0 - e_theta;
  }
  return total;
}

Matrix weighted_crossprod(const Matrix& x, const Vector& w) {
  Matrix f = x.transpose() * w.asDiagonal() * x;
  return 0.5 * (f + f.transpose());
}

Vector fisher_weights(const LinkState& s) {
  return (s.mu.array() / (1.0 + s.theta.array())).matrix();
}

}  // namespace

Dataset::Dataset(Matrix design, Vector response)
    : design_(std::move(design)), response_(std::move(response)) {
  const Eigen::Index n = design_.rows();
  const Eigen::Index k = design_.cols();
  if (k < 1) throw std::invalid_argument("design matrix needs at least the intercept column");
  if (response_.size() != n) {
    throw std::invalid_argument("response length " + std::to_string(response_.size()) +
                                " does not match design rows " + std::to_string(n));
  }
  if (n <= k) {
    throw std::invalid_argument("need more rows (" + std::to_string(n) +
                                ") than coefficients (" + std::to_string(k) + ")");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (design_(i, 0) != 1.0) {
      throw std::invalid_argument("first design column must be the intercept (row " +
                                  std::to_string(i + 1) + ")");
    }
    const double y = response_[i];
    if (!(y >= 0.0) || y != std::floor(y) || !std::isfinite(y)) {
      throw std::invalid_argument("response must be a non-negative integer (row " +
                                  std::to_string(i + 1) + ")");
    }
    if (!design_.row(i).allFinite()) {
      throw std::invalid_argument("non-finite covariate at row " + std::to_string(i + 1));
    }
  }
  log_normalizer_ = log_normalizer_of(response_);
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Matrix x(static_cast<Eigen::Index>(rows.size()), design_.cols());
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = design_.row(rows[i]);
    y[static_cast<Eigen::Index>(i)] = response_[rows[i]];
  }
  return Dataset(std::move(x), std::move(y));
}

double loglik(const Vector& beta, const Dataset& data) {
  if (beta.size() != data.coefficients()) throw std::invalid_argument("loglik: beta size mismatch");
  const LinkState s = link_state(beta, data, std::numeric_limits<double>::infinity());
  const double value = kernel(s, data.response()) + data.log_normalizer();
  if (!std::isfinite(value)) throw NumericalError("log-likelihood is not finite");
  return value;
}

Vector score(const Vector& beta, const Dataset& data) {
  if (beta.size() != data.coefficients()) throw std::invalid_argument("score: beta size mismatch");
  const LinkState s = link_state(beta, data, std::numeric_limits<double>::infinity());
  const Vector u = ((data.response() - s.mu).array() / (1.0 + s.theta.array())).matrix();
  return data.design().transpose() * u;
}

Matrix fisher_information(const Vector& beta, const Dataset& data) {
  const LinkState s = link_state(beta, data, std::numeric_limits<double>::infinity());
  return weighted_crossprod(data.design(), fisher_weights(s));
}

FittedModel fit(const Dataset& data, const FitOptions& opts) {
  const Matrix& x = data.design();
  const Vector& y = data.response();

  FittedModel out;
  {
    const Vector z = (y.array() + 0.5).log().matrix();
    out.beta = spd_solve(Matrix(x.transpose() * x), Vector(x.transpose() * z));
  }

  LinkState state = link_state(out.beta, data, opts.eta_clamp);
  out.n_clamped += state.clamped;
  double current = kernel(state, y);

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    out.n_iter = iter;
    const Vector w = fisher_weights(state);
    const Vector working = state.eta + ((y - state.mu).array() / state.mu.array()).matrix();
    const Cholesky chol(weighted_crossprod(x, w));
    out.jittered = out.jittered || chol.jittered();
    const Vector target = chol.solve(Vector(x.transpose() * (w.asDiagonal() * working)));
    Vector step = target - out.beta;
    const double full_step = step.cwiseAbs().maxCoeff();

    Vector candidate = out.beta + step;
    LinkState next = link_state(candidate, data, opts.eta_clamp);
    double value = kernel(next, y);
    for (int h = 0; h < opts.max_halvings && !(value >= current); ++h) {
      step *= 0.5;
      candidate = out.beta + step;
      next = link_state(candidate, data, opts.eta_clamp);
      value = kernel(next, y);
    }
    out.n_clamped += next.clamped;
    out.beta = std::move(candidate);
    state = std::move(next);
    current = value;
    if (full_step < opts.tolerance) {
      out.converged = true;
      break;
    }
  }

  if (!out.beta.allFinite()) throw NumericalError("Fisher scoring produced non-finite coefficients");
  out.fisher_info = weighted_crossprod(x, fisher_weights(state));
  out.loglik = current + data.log_normalizer();
  return out;
}

double aic(const FittedModel& model) {
  return 2.0 * static_cast<double>(model.beta.size()) - 2.0 * model.loglik;
}

}  // namespace bellshrink
