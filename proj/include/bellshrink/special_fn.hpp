#pragma once

#include <cstdint>

namespace bellshrink {

// Principal branch of the Lambert W function on [0, inf): the w >= 0 with
// w * exp(w) == x. Throws DomainError for negative or non-finite x.
double lambert_w0(double x);

// ln B_n, the natural log of the n-th Bell number. Exact log-space Bell
// triangle for small n (memoized), Dobinski's series for large n.
double log_bell(std::uint64_t n);

namespace detail {
// Exposed for cross-checking the two evaluation routes.
double log_bell_triangle(std::uint64_t n);
double log_bell_dobinski(std::uint64_t n);
inline constexpr std::uint64_t kBellTriangleMax = 1000;
}  // namespace detail

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Central chi-square distribution with real degrees of freedom.
double chisq_cdf(double x, double dof);
// Inverse of chisq_cdf: the x with P(chi2_dof <= x) = prob, prob in (0, 1).
double chisq_quantile(double prob, double dof);

// Noncentral chi-square law chi2_dof(noncentrality). The noncentrality is
// the sum of squared means (delta), so the Poisson mixing rate is delta / 2.
class NoncentralChiSq {
 public:
  NoncentralChiSq(int dof, double noncentrality);

  int dof() const noexcept { return dof_; }
  double noncentrality() const noexcept { return noncentrality_; }

 private:
  int dof_;
  double noncentrality_;
};

// P(chi2_dof(delta) <= x) via the Poisson mixture of central CDFs.
double noncentral_chisq_cdf(double x, const NoncentralChiSq& dist);

// E[X^-order] for X ~ chi2_dof(delta); order 1 needs dof >= 3, order 2
// needs dof >= 5.
double inv_moment(const NoncentralChiSq& dist, int order);

// E[X^-order * 1{X < cutoff}] for X ~ chi2_dof(delta). Same dof
// requirements as inv_moment.
double truncated_inv_moment(const NoncentralChiSq& dist, double cutoff, int order = 1);

}  // namespace bellshrink
