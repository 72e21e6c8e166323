#pragma once

#include <cstdint>

#include "bellshrink/rng.hpp"

namespace bellshrink {

// Bell distribution parameter. theta > 0 is the natural parameter and
// mean = theta * exp(theta); either may be used to construct it.
class BellParam {
 public:
  static BellParam from_theta(double theta);
  static BellParam from_mean(double mean);

  double theta() const noexcept { return theta_; }
  double mean() const noexcept { return mean_; }

 private:
  BellParam(double theta, double mean) : theta_(theta), mean_(mean) {}
  double theta_;
  double mean_;
};

// ln P(Y = y) = y ln(theta) + 1 - e^theta + ln B_y - ln y!
double log_pmf(std::uint64_t y, const BellParam& p);
double pmf(std::uint64_t y, const BellParam& p);

struct BellMoments {
  double mean;
  double variance;
};

BellMoments moments(const BellParam& p);

// Compound-Poisson draw: N ~ Poisson(e^theta - 1) summands, each
// zero-truncated Poisson(theta).
std::uint64_t sample(const BellParam& p, RandomStream& rng);

namespace detail {
std::uint64_t sample_zero_truncated_poisson(double rate, RandomStream& rng);
}

}  // namespace bellshrink
