#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "bellshrink/bell_glm.hpp"
#include "bellshrink/linalg.hpp"

namespace bellshrink {

// The hypothesis H beta = h, with H of full row rank r <= p + 1.
class LinearRestriction {
 public:
  LinearRestriction(Matrix H, Vector h);

  const Matrix& matrix() const noexcept { return H_; }
  const Vector& rhs() const noexcept { return h_; }
  int rank() const noexcept { return static_cast<int>(H_.rows()); }
  Eigen::Index coefficients() const noexcept { return H_.cols(); }

 private:
  Matrix H_;
  Vector h_;
};

enum class Estimator { kUN, kRE, kPTE, kJSE, kPJSE };

inline constexpr std::array<Estimator, 5> kAllEstimators = {
    Estimator::kUN, Estimator::kRE, Estimator::kJSE, Estimator::kPJSE, Estimator::kPTE};

std::string_view to_string(Estimator e);

// un - F^-1 H' (H F^-1 H')^-1 (H un - h). Throws SingularMatrixError when
// H F^-1 H' is singular.
Vector restricted(const Vector& un, const Matrix& fisher, const LinearRestriction& rest);
Vector restricted(const FittedModel& model, const LinearRestriction& rest);

// Wald form (H un - h)' (H F^-1 H')^-1 (H un - h).
double test_statistic(const Vector& un, const Matrix& fisher, const LinearRestriction& rest);
double test_statistic(const FittedModel& model, const LinearRestriction& rest);

// 2 [l(un) - l(re)], reported for diagnostics only.
double likelihood_ratio_statistic(const FittedModel& model, const LinearRestriction& rest,
                                  const Dataset& data);

// Upper-alpha critical value of chi2_r.
double pretest_critical_value(int r, double alpha);

// re when f_stat < chi2_{r, alpha}, else un.
Vector pretest(const Vector& un, const Vector& re, double f_stat, int r, double alpha);

// re + (1 - (r - 2) / f_stat) (un - re); needs r >= 3 and f_stat > 0.
Vector james_stein(const Vector& un, const Vector& re, double f_stat, int r);

// james_stein with the shrinkage factor clamped at zero.
Vector positive_james_stein(const Vector& un, const Vector& re, double f_stat, int r);

struct EstimatorSet {
  Vector un;
  Vector re;
  Vector pte;
  // Absent when r < 3 (the Stein factor r - 2 is then non-positive).
  std::optional<Vector> jse;
  std::optional<Vector> pjse;
  double f_stat = 0.0;
  double alpha = 0.05;
  int r = 0;

  bool has(Estimator e) const;
  const Vector& get(Estimator e) const;
};

EstimatorSet compute_all(const Vector& un, const Matrix& fisher, const LinearRestriction& rest,
                         double alpha);
EstimatorSet compute_all(const FittedModel& model, const LinearRestriction& rest, double alpha);

}  // namespace bellshrink
