#pragma once

#include <array>

#include "bellshrink/linalg.hpp"
#include "bellshrink/shrinkage.hpp"

namespace bellshrink {

// Local alternative H beta = h + gamma / sqrt(n) around a Fisher matrix F
// (per-observation scale, so sqrt(n)(un - beta) -> N(0, F^-1)).
class LocalAlternative {
 public:
  LocalAlternative(Vector gamma, Matrix fisher, LinearRestriction rest);

  const Vector& gamma() const noexcept { return gamma_; }
  const LinearRestriction& restriction() const noexcept { return rest_; }
  int r() const noexcept { return rest_.rank(); }

  const Matrix& fisher_inv() const noexcept { return fisher_inv_; }
  // F^-1 H' (H F^-1 H')^-1
  const Matrix& kappa() const noexcept { return kappa_; }
  // kappa H F^-1
  const Matrix& kappa0() const noexcept { return kappa0_; }
  // kappa gamma, the mean of sqrt(n)(un - re)
  const Vector& shift() const noexcept { return shift_; }
  // gamma' (H F^-1 H')^-1 gamma
  double delta() const noexcept { return delta_; }

 private:
  Vector gamma_;
  LinearRestriction rest_;
  Matrix fisher_inv_;
  Matrix kappa_;
  Matrix kappa0_;
  Vector shift_;
  double delta_ = 0.0;
};

// Limiting bias of sqrt(n)(estimator - beta). Zero for UN.
Vector asymptotic_bias(Estimator e, const LocalAlternative& la, double alpha);

// Limiting E[n (estimator - beta)(estimator - beta)'].
Matrix asymptotic_amse(Estimator e, const LocalAlternative& la, double alpha);

// Joint normal limit of Z1 = sqrt(n)(un - beta), Z2 = sqrt(n)(re - beta),
// Z3 = sqrt(n)(un - re).
struct Lemma1Moments {
  std::array<Vector, 3> means;
  std::array<std::array<Matrix, 3>, 3> cov;
};

Lemma1Moments lemma1_moments(const LocalAlternative& la);

}  // namespace bellshrink
