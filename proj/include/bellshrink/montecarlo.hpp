#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bellshrink/bell_glm.hpp"
#include "bellshrink/rng.hpp"
#include "bellshrink/shrinkage.hpp"

namespace bellshrink {

struct SimConfig {
  std::vector<int> n_grid{50};
  std::vector<int> p_grid{3};
  std::vector<double> tau_grid{0.0};
  int replications = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 20240601;
  // Defaults to (0, 1, ..., 1) of length p + 1 for each p in p_grid.
  std::optional<Vector> true_beta;
  bool fixed_design = false;
  int threads = 1;
  double max_failure_fraction = 0.05;
};

// Results for one (n, p, tau) grid point. Arrays are indexed by
// estimator_index() in the order UN, RE, JSE, PJSE, PTE.
struct GridPointResult {
  int n = 0;
  int p = 0;
  double tau = 0.0;
  int replications = 0;
  int n_retry = 0;
  std::array<double, 5> smse{};
  std::array<double, 5> sre{};
  std::array<double, 5> sre_se{};
};

struct SimResult {
  std::vector<GridPointResult> points;
};

std::size_t estimator_index(Estimator e);

// beta_0 = tau and beta_i - beta_{i+1} = 0 for i = 1..p-1.
LinearRestriction build_restriction(int p, double tau);

Vector default_true_beta(int p);

// n x (p + 1) design with intercept and i.i.d. N(0, 1) covariates.
Matrix generate_design(int n, int p, RandomStream& rng);
// Bell responses with theta_i = W0(exp(x_i' beta)).
Vector generate_response(const Matrix& design, const Vector& beta, RandomStream& rng);
Dataset generate_dataset(int n, int p, const Vector& beta, RandomStream& rng);

// Squared errors |est - beta|^2 of one replication, or nullopt when the fit
// did not converge or the estimator suite could not be formed.
std::optional<std::array<double, 5>> replication_errors(const Dataset& data,
                                                         const LinearRestriction& rest,
                                                         const Vector& truth, double alpha);

GridPointResult run_grid_point(const SimConfig& cfg, std::size_t grid_index, int n, int p,
                               double tau);

// Throws NumericalError when a grid point needs retries for more than
// max_failure_fraction of its replications.
SimResult run_simulation(const SimConfig& cfg);

// key = value lines; '#' comments; list values comma separated.
// Keys: n, p, tau, replications, alpha, seed, fixed_design, beta.
SimConfig parse_sim_config(std::istream& in);

// Columns n,p,tau,estimator,smse,sre,sre_se,n_retry; one row per
// RE/JSE/PJSE/PTE per grid point.
void write_table_csv(const SimResult& result, std::ostream& out);

// Long format for SRE-vs-tau curves, all five estimators.
void write_curves_csv(const SimResult& result, std::ostream& out);

}  // namespace bellshrink
