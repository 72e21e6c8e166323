#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bellshrink/bell_glm.hpp"
#include "bellshrink/shrinkage.hpp"

namespace bellshrink {

struct LoadedDataset {
  Dataset data;
  std::string response;
  std::vector<std::string> covariates;
};

// Reads a comma-separated file with a header row. The response column must
// hold non-negative integers; an intercept column is prepended to the
// requested covariates. Errors are ParseError with the offending line.
LoadedDataset load_dataset(std::istream& in, const std::string& response,
                           const std::vector<std::string>& covariates);
LoadedDataset load_dataset(const std::string& path, const std::string& response,
                           const std::vector<std::string>& covariates);

// Sample variance over sample mean of the counts.
double overdispersion_ratio(const Vector& counts);

// H selects the listed coefficient indices, h = 0.
LinearRestriction zero_restriction(Eigen::Index coefficients, const std::vector<Eigen::Index>& indices);

struct BootstrapConfig {
  int resample_size = 40;
  int replications = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 20240601;
  std::optional<LinearRestriction> restriction;
  // Reference vector for squared errors; the full-sample UN when unset.
  std::optional<Vector> pseudo_truth;
  bool with_replacement = true;
  int threads = 1;
  double max_failure_fraction = 0.10;
};

struct BootstrapEstimate {
  Estimator estimator = Estimator::kUN;
  bool available = false;  // JSE/PJSE need r >= 3
  Vector estimate;         // full-sample value
  Vector se;               // per-coefficient bootstrap standard deviation
  double smse = 0.0;
  double bre = 0.0;
};

struct BREReport {
  EstimatorSet full_sample;
  std::vector<BootstrapEstimate> estimators;  // UN, RE, JSE, PJSE, PTE
  int replications = 0;
  int n_retry = 0;
  // Replications whose restricted estimate violated H b = h beyond 1e-8.
  int restriction_violations = 0;
  double max_restriction_residual = 0.0;

  const BootstrapEstimate& get(Estimator e) const;
};

// Pairs bootstrap: resample rows, refit, recompute the estimator suite and
// accumulate squared error against the pseudo truth. BRE = SMSE(UN)/SMSE.
BREReport bootstrap_bre(const Dataset& data, const BootstrapConfig& cfg);

// Columns estimator,coefficient,estimate,se,bre.
void write_bre_csv(const BREReport& report, const std::vector<std::string>& coefficient_names,
                   std::ostream& out);

}  // namespace bellshrink
