#include "bellshrink/shrinkage.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bellshrink/errors.hpp"
#include "bellshrink/special_fn.hpp"

namespace bellshrink {

namespace {

void check_dims(const Vector& un, const Matrix& fisher, const LinearRestriction& rest) {
  if (un.size() != fisher.rows() || fisher.rows() != fisher.cols() ||
      rest.coefficients() != un.size()) {
    throw std::invalid_argument("restriction, coefficient and Fisher dimensions disagree");
  }
}

void check_stein(double f_stat, int r) {
  if (r < 3) throw DomainError("James-Stein estimators need r >= 3, got " + std::to_string(r));
  if (!(f_stat > 0.0)) {
    throw DomainError("James-Stein shrinkage factor undefined for test statistic " +
                      std::to_string(f_stat));
  }
}

double stein_factor(double f_stat, int r) { return 1.0 - static_cast<double>(r - 2) / f_stat; }

}  // namespace

LinearRestriction::LinearRestriction(Matrix H, Vector h) : H_(std::move(H)), h_(std::move(h)) {
  if (H_.rows() < 1) throw std::invalid_argument("restriction needs at least one row");
  if (h_.size() != H_.rows()) {
    throw std::invalid_argument("restriction right-hand side has " + std::to_string(h_.size()) +
                                " entries for " + std::to_string(H_.rows()) + " rows");
  }
  if (H_.rows() > H_.cols()) {
    throw std::invalid_argument("restriction has more rows than coefficients");
  }
  if (!H_.allFinite() || !h_.allFinite()) throw std::invalid_argument("restriction is not finite");
  Eigen::FullPivLU<Matrix> lu(H_);
  lu.setThreshold(1e-10);
  if (lu.rank() != H_.rows()) {
    throw DomainError("restriction matrix must have full row rank (rank " +
                      std::to_string(lu.rank()) + " < " + std::to_string(H_.rows()) + ")");
  }
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kUN: return "UN";
    case Estimator::kRE: return "RE";
    case Estimator::kPTE: return "PTE";
    case Estimator::kJSE: return "JSE";
    case Estimator::kPJSE: return "PJSE";
  }
  return "?";
}

Vector restricted(const Vector& un, const Matrix& fisher, const LinearRestriction& rest) {
  check_dims(un, fisher, rest);
  const Cholesky f(fisher);
  const Matrix& H = rest.matrix();
  const Matrix f_inv_ht = f.solve(Matrix(H.transpose()));
  const Matrix middle = H * f_inv_ht;
  const Cholesky m(middle);
  Vector re = un - f_inv_ht * m.solve(Vector(H * un - rest.rhs()));
  // One refinement step on the constraint residual.
  re -= f_inv_ht * m.solve(Vector(H * re - rest.rhs()));
  return re;
}

Vector restricted(const FittedModel& model, const LinearRestriction& rest) {
  return restricted(model.beta, model.fisher_info, rest);
}

double test_statistic(const Vector& un, const Matrix& fisher, const LinearRestriction& rest) {
  check_dims(un, fisher, rest);
  const Matrix& H = rest.matrix();
  const Matrix middle = H * Cholesky(fisher).solve(Matrix(H.transpose()));
  return quad_form(H * un - rest.rhs(), middle);
}

double test_statistic(const FittedModel& model, const LinearRestriction& rest) {
  return test_statistic(model.beta, model.fisher_info, rest);
}

double likelihood_ratio_statistic(const FittedModel& model, const LinearRestriction& rest,
                                  const Dataset& data) {
  const Vector re = restricted(model, rest);
  return 2.0 * (loglik(model.beta, data) - loglik(re, data));
}

double pretest_critical_value(int r, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (r < 1) throw DomainError("restriction count must be positive");
  return chisq_quantile(1.0 - alpha, r);
}

Vector pretest(const Vector& un, const Vector& re, double f_stat, int r, double alpha) {
  return f_stat < pretest_critical_value(r, alpha) ? re : un;
}

Vector james_stein(const Vector& un, const Vector& re, double f_stat, int r) {
  check_stein(f_stat, r);
  return re + stein_factor(f_stat, r) * (un - re);
}

Vector positive_james_stein(const Vector& un, const Vector& re, double f_stat, int r) {
  check_stein(f_stat, r);
  const double factor = stein_factor(f_stat, r);
  if (factor <= 0.0) return re;
  return re + factor * (un - re);
}

bool EstimatorSet::has(Estimator e) const {
  switch (e) {
    case Estimator::kJSE: return jse.has_value();
    case Estimator::kPJSE: return pjse.has_value();
    default: return true;
  }
}

const Vector& EstimatorSet::get(Estimator e) const {
  switch (e) {
    case Estimator::kUN: return un;
    case Estimator::kRE: return re;
    case Estimator::kPTE: return pte;
    case Estimator::kJSE:
      if (!jse) throw DomainError("JSE is not defined for r = " + std::to_string(r));
      return *jse;
    case Estimator::kPJSE:
      if (!pjse) throw DomainError("PJSE is not defined for r = " + std::to_string(r));
      return *pjse;
  }
  throw std::logic_error("unknown estimator");
}

EstimatorSet compute_all(const Vector& un, const Matrix& fisher, const LinearRestriction& rest,
                         double alpha) {
  EstimatorSet out;
  out.r = rest.rank();
  out.alpha = alpha;
  out.un = un;
  out.re = restricted(un, fisher, rest);
  out.f_stat = test_statistic(un, fisher, rest);
  out.pte = pretest(out.un, out.re, out.f_stat, out.r, alpha);
  if (out.r >= 3) {
    if (out.f_stat > 0.0) {
      out.jse = james_stein(out.un, out.re, out.f_stat, out.r);
      out.pjse = positive_james_stein(out.un, out.re, out.f_stat, out.r);
    } else {
      out.jse = out.re;
      out.pjse = out.re;
    }
  }
  return out;
}

EstimatorSet compute_all(const FittedModel& model, const LinearRestriction& rest, double alpha) {
  return compute_all(model.beta, model.fisher_info, rest, alpha);
}

}  // namespace bellshrink
