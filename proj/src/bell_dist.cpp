#include "bellshrink/bell_dist.hpp"

#include <cmath>
#include <random>

#include "bellshrink/errors.hpp"
#include "bellshrink/special_fn.hpp"

namespace bellshrink {

BellParam BellParam::from_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw DomainError("Bell parameter theta must be finite and positive");
  }
  return BellParam(theta, theta * std::exp(theta));
}

BellParam BellParam::from_mean(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw DomainError("Bell mean must be finite and positive");
  }
  return BellParam(lambert_w0(mean), mean);
}

double log_pmf(std::uint64_t y, const BellParam& p) {
  const double yd = static_cast<double>(y);
  const double kernel = y == 0 ? 0.0 : yd * std::log(p.theta());
  return kernel + 1.0 - std::exp(p.theta()) + log_bell(y) - std::lgamma(yd + 1.0);
}

double pmf(std::uint64_t y, const BellParam& p) { return std::exp(log_pmf(y, p)); }

BellMoments moments(const BellParam& p) {
  return {p.mean(), p.mean() * (1.0 + p.theta())};
}

namespace detail {

std::uint64_t sample_zero_truncated_poisson(double rate, RandomStream& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (rate < 0.1) {
    // Inversion: P(X = k | X >= 1) = e^-rate rate^k / (k! (1 - e^-rate)).
    const double u = unif(rng);
    const double norm = -std::expm1(-rate);
    double prob = std::exp(-rate) * rate / norm;
    double cdf = prob;
    std::uint64_t k = 1;
    while (u > cdf && prob > 0.0) {
      ++k;
      prob *= rate / static_cast<double>(k);
      cdf += prob;
    }
    return k;
  }
  std::poisson_distribution<std::uint64_t> pois(rate);
  for (;;) {
    const std::uint64_t k = pois(rng);
    if (k >= 1) return k;
  }
}

}  // namespace detail

std::uint64_t sample(const BellParam& p, RandomStream& rng) {
  const double count_rate = std::expm1(p.theta());
  std::poisson_distribution<std::uint64_t> count_dist(count_rate);
  const std::uint64_t count = count_dist(rng);
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    total += detail::sample_zero_truncated_poisson(p.theta(), rng);
  }
  return total;
}

}  // namespace bellshrink
