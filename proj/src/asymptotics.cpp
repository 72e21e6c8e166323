#include "bellshrink/asymptotics.hpp"

#include <stdexcept>

#include "bellshrink/errors.hpp"
#include "bellshrink/special_fn.hpp"

namespace bellshrink {

namespace {

// Noncentral chi-square functionals that the closed forms are built from.
// dof is r + 2 or r + 4; the Stein cutoff is r - 2.
struct ChiFunctionals {
  int r;
  double delta;

  NoncentralChiSq law(int extra) const { return NoncentralChiSq(r + extra, delta); }
  double cdf(int extra, double x) const {
    return x <= 0.0 ? 0.0 : noncentral_chisq_cdf(x, law(extra));
  }
  double inv1(int extra) const { return inv_moment(law(extra), 1); }
  double inv2(int extra) const { return inv_moment(law(extra), 2); }

  // E[(1 - c/X) 1{X < c}], c = r - 2.
  double stein_tail1(int extra) const {
    const double c = r - 2.0;
    return cdf(extra, c) - c * truncated_inv_moment(law(extra), c, 1);
  }
  // E[(1 - c/X)^2 1{X < c}].
  double stein_tail2(int extra) const {
    const double c = r - 2.0;
    return cdf(extra, c) - 2.0 * c * truncated_inv_moment(law(extra), c, 1) +
           c * c * truncated_inv_moment(law(extra), c, 2);
  }
};

void require_stein(const LocalAlternative& la) {
  if (la.r() < 3) throw DomainError("James-Stein asymptotics need r >= 3");
}

double critical(const LocalAlternative& la, double alpha) {
  return pretest_critical_value(la.r(), alpha);
}

}  // namespace

LocalAlternative::LocalAlternative(Vector gamma, Matrix fisher, LinearRestriction rest)
    : gamma_(std::move(gamma)), rest_(std::move(rest)) {
  if (gamma_.size() != rest_.rank()) {
    throw std::invalid_argument("gamma must have one entry per restriction row");
  }
  if (fisher.rows() != rest_.coefficients() || fisher.cols() != rest_.coefficients()) {
    throw std::invalid_argument("Fisher matrix does not match restriction width");
  }
  fisher_inv_ = spd_inverse(fisher);
  const Matrix& H = rest_.matrix();
  const Matrix middle = H * fisher_inv_ * H.transpose();
  const Cholesky middle_chol(middle);
  kappa_ = middle_chol.solve(Matrix(H * fisher_inv_)).transpose();
  kappa0_ = kappa_ * H * fisher_inv_;
  kappa0_ = 0.5 * (kappa0_ + kappa0_.transpose());
  shift_ = kappa_ * gamma_;
  delta_ = gamma_.dot(middle_chol.solve(gamma_));
  if (delta_ < 0.0) delta_ = 0.0;
}

Vector asymptotic_bias(Estimator e, const LocalAlternative& la, double alpha) {
  const Vector& k = la.shift();
  const ChiFunctionals chi{la.r(), la.delta()};
  const double c = la.r() - 2.0;
  switch (e) {
    case Estimator::kUN:
      return Vector::Zero(k.size());
    case Estimator::kRE:
      return -k;
    case Estimator::kJSE:
      require_stein(la);
      return -c * chi.inv1(2) * k;
    case Estimator::kPJSE:
      require_stein(la);
      return -(c * chi.inv1(2) + chi.stein_tail1(2)) * k;
    case Estimator::kPTE:
      return -chi.cdf(2, critical(la, alpha)) * k;
  }
  throw std::logic_error("unknown estimator");
}

Matrix asymptotic_amse(Estimator e, const LocalAlternative& la, double alpha) {
  const Vector& k = la.shift();
  const Matrix kk = k * k.transpose();
  const Matrix& f_inv = la.fisher_inv();
  const Matrix& k0 = la.kappa0();
  const ChiFunctionals chi{la.r(), la.delta()};
  const double c = la.r() - 2.0;

  auto jse = [&] {
    return Matrix(f_inv + 2.0 * c * chi.inv1(2) * kk - 2.0 * c * chi.inv1(2) * k0 +
                  c * c * chi.inv2(2) * k0 - 2.0 * c * chi.inv1(4) * kk +
                  c * c * chi.inv2(4) * kk);
  };

  switch (e) {
    case Estimator::kUN:
      return f_inv;
    case Estimator::kRE:
      return f_inv - k0 + kk;
    case Estimator::kJSE:
      require_stein(la);
      return jse();
    case Estimator::kPJSE:
      require_stein(la);
      return jse() + 2.0 * chi.stein_tail1(2) * kk - chi.stein_tail2(2) * k0 -
             chi.stein_tail2(4) * kk;
    case Estimator::kPTE: {
      const double q = critical(la, alpha);
      return f_inv - chi.cdf(2, q) * k0 + (2.0 * chi.cdf(2, q) - chi.cdf(4, q)) * kk;
    }
  }
  throw std::logic_error("unknown estimator");
}

Lemma1Moments lemma1_moments(const LocalAlternative& la) {
  const Vector& k = la.shift();
  const Matrix& f_inv = la.fisher_inv();
  const Matrix& k0 = la.kappa0();
  const Eigen::Index p = k.size();
  Lemma1Moments m;
  m.means = {Vector::Zero(p), -k, k};
  const Matrix c22 = f_inv - k0;
  m.cov = {{{f_inv, c22, k0}, {c22, c22, Matrix::Zero(p, p)}, {k0, Matrix::Zero(p, p), k0}}};
  return m;
}

}  // namespace bellshrink
