#include "bellshrink/special_fn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "bellshrink/errors.hpp"

namespace bellshrink {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTailMass = 1e-12;

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// Sums w_j * term(j) over the Poisson(rate) weights w_j, starting at the
// mode and expanding toward whichever side has the heavier next weight,
// until the unvisited mass is below kTailMass.
template <typename Term>
double poisson_mixture(double rate, Term&& term) {
  if (rate == 0.0) return term(0);
  const long mode = static_cast<long>(std::floor(rate));
  const double w_mode =
      std::exp(-rate + static_cast<double>(mode) * std::log(rate) - std::lgamma(mode + 1.0));

  double total = w_mode * term(mode);
  double mass = w_mode;
  long lo = mode;
  long hi = mode;
  double w_lo = w_mode;
  double w_hi = w_mode;
  constexpr long kMaxTerms = 10'000'000;
  for (long steps = 0; 1.0 - mass >= kTailMass && steps < kMaxTerms; ++steps) {
    const double next_lo = lo > 0 ? w_lo * static_cast<double>(lo) / rate : 0.0;
    const double next_hi = w_hi * rate / static_cast<double>(hi + 1);
    if (next_lo > next_hi) {
      --lo;
      w_lo = next_lo;
      total += w_lo * term(lo);
      mass += w_lo;
    } else {
      ++hi;
      w_hi = next_hi;
      total += w_hi * term(hi);
      mass += w_hi;
      // Guard against an underflowed upper tail when the lower side is exhausted.
      if (lo == 0 && next_hi == 0.0) break;
    }
  }
  return total;
}

void require_dof_for_order(const NoncentralChiSq& dist, int order) {
  if (order != 1 && order != 2) {
    throw DomainError("inverse moment order must be 1 or 2, got " + std::to_string(order));
  }
  const int needed = order == 1 ? 3 : 5;
  if (dist.dof() < needed) {
    throw DomainError("inverse moment of order " + std::to_string(order) +
                      " diverges for dof " + std::to_string(dist.dof()) + " (need dof >= " +
                      std::to_string(needed) + ")");
  }
}

}  // namespace

double lambert_w0(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("lambert_w0 requires a finite non-negative argument");
  }
  if (x == 0.0) return 0.0;

  double w;
  if (x <= M_E) {
    w = std::log1p(x);
  } else {
    const double l = std::log(x);
    w = l - std::log(l);
  }
  for (int iter = 0; iter < 50; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::fabs(step) <= std::max(1e-14, 4.0 * kEps * w)) break;
  }
  return w;
}

namespace detail {

double log_bell_triangle(std::uint64_t n) {
  static std::vector<double> table;
  static std::once_flag built;
  std::call_once(built, [] {
    table.resize(kBellTriangleMax + 1);
    table[0] = 0.0;
    std::vector<double> row{0.0};
    std::vector<double> next;
    for (std::uint64_t i = 1; i <= kBellTriangleMax; ++i) {
      next.assign(i + 1, 0.0);
      next[0] = row.back();
      for (std::uint64_t k = 1; k <= i; ++k) next[k] = log_add(next[k - 1], row[k - 1]);
      row.swap(next);
      table[i] = row[0];
    }
  });
  if (n > kBellTriangleMax) {
    throw DomainError("log_bell_triangle supports n <= " + std::to_string(kBellTriangleMax));
  }
  return table[n];
}

double log_bell_dobinski(std::uint64_t n) {
  // B_n = e^-1 * sum_{k>=1} k^n / k!; log-terms are unimodal in k.
  if (n == 0) return 0.0;
  const double nd = static_cast<double>(n);
  auto log_term = [nd](double k) { return nd * std::log(k) - std::lgamma(k + 1.0); };
  // Peak where n / k ~ ln k; refine the continuous maximizer by bisection.
  double lo = 1.0;
  double hi = std::max(2.0, nd);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    // derivative of log_term ~ n/k - digamma(k+1) ~ n/k - ln(k + 0.5)
    if (nd / mid - std::log(mid + 0.5) > 0.0) lo = mid; else hi = mid;
  }
  const double peak_k = std::max(1.0, std::round(lo));
  const double peak = log_term(peak_k);
  double acc = 0.0;  // sum of exp(log_term - peak)
  constexpr double kCut = 40.0;
  for (double k = peak_k; k >= 1.0; k -= 1.0) {
    const double d = log_term(k) - peak;
    acc += std::exp(d);
    if (d < -kCut) break;
  }
  for (double k = peak_k + 1.0;; k += 1.0) {
    const double d = log_term(k) - peak;
    acc += std::exp(d);
    if (d < -kCut) break;
  }
  return peak + std::log(acc) - 1.0;
}

}  // namespace detail

double log_bell(std::uint64_t n) {
  if (n <= detail::kBellTriangleMax) return detail::log_bell_triangle(n);
  return detail::log_bell_dobinski(n);
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_gamma_p requires a > 0");
  if (!(x >= 0.0)) throw DomainError("regularized_gamma_p requires x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 100000; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  return 1.0 - regularized_gamma_q(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw DomainError("regularized_gamma_q requires a > 0");
  if (!(x >= 0.0)) throw DomainError("regularized_gamma_q requires x >= 0");
  if (x < a + 1.0) return 1.0 - regularized_gamma_p(a, x);
  if (std::isinf(x)) return 0.0;
  // Modified Lentz evaluation of the continued fraction.
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chisq_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi-square dof must be positive");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chisq_quantile(double prob, double dof) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("chisq_quantile requires prob in (0, 1)");
  if (!(dof > 0.0)) throw DomainError("chi-square dof must be positive");
  double lo = 0.0;
  double hi = std::max(1.0, dof);
  while (chisq_cdf(hi, dof) < prob) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 400 && hi - lo > 4.0 * kEps * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chisq_cdf(mid, dof) < prob) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

NoncentralChiSq::NoncentralChiSq(int dof, double noncentrality)
    : dof_(dof), noncentrality_(noncentrality) {
  if (dof < 1) throw DomainError("noncentral chi-square requires dof >= 1");
  if (!(noncentrality >= 0.0) || !std::isfinite(noncentrality)) {
    throw DomainError("noncentral chi-square requires a finite noncentrality >= 0");
  }
}

double noncentral_chisq_cdf(double x, const NoncentralChiSq& dist) {
  if (!(x >= 0.0)) throw DomainError("noncentral_chisq_cdf requires x >= 0");
  if (x == 0.0) return 0.0;
  const double nu = dist.dof();
  const double value = poisson_mixture(0.5 * dist.noncentrality(), [&](long j) {
    return chisq_cdf(x, nu + 2.0 * static_cast<double>(j));
  });
  return std::clamp(value, 0.0, 1.0);
}

double inv_moment(const NoncentralChiSq& dist, int order) {
  require_dof_for_order(dist, order);
  const double nu = dist.dof();
  return poisson_mixture(0.5 * dist.noncentrality(), [&](long j) {
    const double m = nu + 2.0 * static_cast<double>(j);
    return order == 1 ? 1.0 / (m - 2.0) : 1.0 / ((m - 2.0) * (m - 4.0));
  });
}

double truncated_inv_moment(const NoncentralChiSq& dist, double cutoff, int order) {
  require_dof_for_order(dist, order);
  if (!(cutoff > 0.0)) throw DomainError("truncated_inv_moment requires cutoff > 0");
  const double nu = dist.dof();
  // x^-1 f_m(x) = f_{m-2}(x) / (m-2) and x^-2 f_m(x) = f_{m-4}(x) / ((m-2)(m-4)).
  return poisson_mixture(0.5 * dist.noncentrality(), [&](long j) {
    const double m = nu + 2.0 * static_cast<double>(j);
    if (order == 1) return chisq_cdf(cutoff, m - 2.0) / (m - 2.0);
    return chisq_cdf(cutoff, m - 4.0) / ((m - 2.0) * (m - 4.0));
  });
}

}  // namespace bellshrink
