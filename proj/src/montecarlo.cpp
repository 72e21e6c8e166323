#include "bellshrink/montecarlo.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "bellshrink/bell_dist.hpp"
#include "bellshrink/errors.hpp"
#include "bellshrink/parallel.hpp"
#include "text_format.hpp"

namespace bellshrink {

namespace {

constexpr std::uint64_t kDesignStream = 0xD35167ULL;
constexpr int kMaxAttempts = 50;

Vector truth_for(const SimConfig& cfg, int p) {
  if (cfg.true_beta) {
    if (cfg.true_beta->size() != p + 1) {
      throw std::invalid_argument("true_beta has " + std::to_string(cfg.true_beta->size()) +
                                  " entries but p + 1 = " + std::to_string(p + 1));
    }
    return *cfg.true_beta;
  }
  return default_true_beta(p);
}

double parse_double(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": '" + text + "' is not a finite number",
                     line);
  }
}

long long parse_int(const std::string& text, std::size_t line) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": '" + text + "' is not an integer", line);
  }
  return v;
}

}  // namespace

std::size_t estimator_index(Estimator e) {
  switch (e) {
    case Estimator::kUN: return 0;
    case Estimator::kRE: return 1;
    case Estimator::kJSE: return 2;
    case Estimator::kPJSE: return 3;
    case Estimator::kPTE: return 4;
  }
  throw std::logic_error("unknown estimator");
}

LinearRestriction build_restriction(int p, double tau) {
  if (p < 3) throw DomainError("simulation restriction needs p >= 3, got " + std::to_string(p));
  Matrix H = Matrix::Zero(p, p + 1);
  H(0, 0) = 1.0;
  for (int i = 1; i < p; ++i) {
    H(i, i) = 1.0;
    H(i, i + 1) = -1.0;
  }
  Vector h = Vector::Zero(p);
  h[0] = tau;
  return LinearRestriction(std::move(H), std::move(h));
}

Vector default_true_beta(int p) {
  Vector beta = Vector::Ones(p + 1);
  beta[0] = 0.0;
  return beta;
}

Matrix generate_design(int n, int p, RandomStream& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, p + 1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j <= p; ++j) x(i, j) = normal(rng);
  }
  return x;
}

Vector generate_response(const Matrix& design, const Vector& beta, RandomStream& rng) {
  const Vector eta = design * beta;
  Vector y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    y[i] = static_cast<double>(sample(BellParam::from_mean(std::exp(eta[i])), rng));
  }
  return y;
}

Dataset generate_dataset(int n, int p, const Vector& beta, RandomStream& rng) {
  Matrix x = generate_design(n, p, rng);
  Vector y = generate_response(x, beta, rng);
  return Dataset(std::move(x), std::move(y));
}

std::optional<std::array<double, 5>> replication_errors(const Dataset& data,
                                                         const LinearRestriction& rest,
                                                         const Vector& truth, double alpha) {
  try {
    const FittedModel model = fit(data);
    if (!model.converged) return std::nullopt;
    const EstimatorSet set = compute_all(model, rest, alpha);
    std::array<double, 5> err{};
    for (Estimator e : kAllEstimators) {
      if (!set.has(e)) return std::nullopt;
      err[estimator_index(e)] = (set.get(e) - truth).squaredNorm();
    }
    for (double v : err) {
      if (!std::isfinite(v)) return std::nullopt;
    }
    return err;
  } catch (const SingularMatrixError&) {
    return std::nullopt;
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

GridPointResult run_grid_point(const SimConfig& cfg, std::size_t grid_index, int n, int p,
                               double tau) {
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (n <= p + 1) throw std::invalid_argument("simulation needs n > p + 1");
  const Vector truth = truth_for(cfg, p);
  const LinearRestriction rest = build_restriction(p, tau);

  std::optional<Matrix> fixed;
  if (cfg.fixed_design) {
    RandomStream design_rng = substream(cfg.seed, {grid_index, kDesignStream});
    fixed = generate_design(n, p, design_rng);
  }

  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<std::array<double, 5>> errors(reps);
  std::vector<int> retries(reps, 0);

  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      RandomStream rng = substream(cfg.seed, {grid_index, rep, static_cast<std::uint64_t>(attempt)});
      Matrix x = fixed ? *fixed : generate_design(n, p, rng);
      Vector y = generate_response(x, truth, rng);
      const Dataset data(std::move(x), std::move(y));
      if (auto err = replication_errors(data, rest, truth, cfg.alpha)) {
        errors[rep] = *err;
        retries[rep] = attempt;
        return;
      }
    }
    throw NumericalError("replication " + std::to_string(rep) + " failed " +
                         std::to_string(kMaxAttempts) + " consecutive fits");
  });

  GridPointResult out;
  out.n = n;
  out.p = p;
  out.tau = tau;
  out.replications = cfg.replications;
  for (int r : retries) out.n_retry += r;
  if (out.n_retry > cfg.max_failure_fraction * cfg.replications) {
    throw NumericalError("grid point n=" + std::to_string(n) + " p=" + std::to_string(p) +
                         " tau=" + detail::fmt_num(tau) + ": " + std::to_string(out.n_retry) +
                         " non-converged replications exceed the " +
                         detail::fmt_num(100.0 * cfg.max_failure_fraction) + "% limit");
  }

  const double count = static_cast<double>(reps);
  std::vector<double> column(reps);
  std::array<std::vector<double>, 5> cols;
  for (std::size_t k = 0; k < 5; ++k) {
    cols[k].resize(reps);
    for (std::size_t i = 0; i < reps; ++i) cols[k][i] = errors[i][k];
    out.smse[k] = pairwise_sum(cols[k]) / count;
  }

  // Delta method for mean(a) / mean(b) with a = UN errors, b = candidate.
  const auto& un = cols[0];
  for (std::size_t k = 0; k < 5; ++k) {
    out.sre[k] = out.smse[0] / out.smse[k];
    if (k == 0 || reps < 2) {
      out.sre_se[k] = 0.0;
      continue;
    }
    const double ratio = out.sre[k];
    for (std::size_t i = 0; i < reps; ++i) {
      column[i] = un[i] - out.smse[0] - ratio * (cols[k][i] - out.smse[k]);
      column[i] *= column[i];
    }
    const double var = pairwise_sum(column) / (count - 1.0);
    out.sre_se[k] = std::sqrt(var / count) / out.smse[k];
  }
  return out;
}

SimResult run_simulation(const SimConfig& cfg) {
  SimResult result;
  std::size_t grid_index = 0;
  for (int n : cfg.n_grid) {
    for (int p : cfg.p_grid) {
      for (double tau : cfg.tau_grid) {
        result.points.push_back(run_grid_point(cfg, grid_index, n, p, tau));
        ++grid_index;
      }
    }
  }
  return result;
}

SimConfig parse_sim_config(std::istream& in) {
  SimConfig cfg;
  std::string raw;
  std::size_t line = 0;
  std::vector<double> beta;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line) + ": expected key = value", line);
    }
    const std::string key(detail::trim(text.substr(0, eq)));
    const auto values = detail::split(detail::trim(text.substr(eq + 1)), ',');
    auto ints = [&] {
      std::vector<int> v;
      for (const auto& s : values) v.push_back(static_cast<int>(parse_int(s, line)));
      return v;
    };
    auto doubles = [&] {
      std::vector<double> v;
      for (const auto& s : values) v.push_back(parse_double(s, line));
      return v;
    };
    auto single = [&]() -> const std::string& {
      if (values.size() != 1) {
        throw ParseError("line " + std::to_string(line) + ": '" + key + "' takes one value", line);
      }
      return values.front();
    };
    if (key == "n") {
      cfg.n_grid = ints();
    } else if (key == "p") {
      cfg.p_grid = ints();
    } else if (key == "tau") {
      cfg.tau_grid = doubles();
    } else if (key == "replications") {
      cfg.replications = static_cast<int>(parse_int(single(), line));
    } else if (key == "alpha") {
      cfg.alpha = parse_double(single(), line);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(single(), line));
    } else if (key == "fixed_design") {
      const std::string& v = single();
      if (v != "true" && v != "false" && v != "1" && v != "0") {
        throw ParseError("line " + std::to_string(line) + ": fixed_design must be true/false", line);
      }
      cfg.fixed_design = v == "true" || v == "1";
    } else if (key == "beta") {
      beta = doubles();
    } else {
      throw ParseError("line " + std::to_string(line) + ": unknown key '" + key + "'", line);
    }
  }
  if (cfg.n_grid.empty() || cfg.p_grid.empty() || cfg.tau_grid.empty()) {
    throw ParseError("n, p and tau must each list at least one value", 0);
  }
  if (cfg.replications < 1) throw ParseError("replications must be >= 1", 0);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ParseError("alpha must lie in (0, 1)", 0);
  for (int p : cfg.p_grid) {
    if (p < 3) throw ParseError("every p must be >= 3", 0);
    for (int n : cfg.n_grid) {
      if (n <= p + 1) throw ParseError("every n must exceed p + 1", 0);
    }
  }
  if (!beta.empty()) {
    if (cfg.p_grid.size() != 1 || beta.size() != static_cast<std::size_t>(cfg.p_grid[0] + 1)) {
      throw ParseError("beta needs a single p and exactly p + 1 entries", 0);
    }
    cfg.true_beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  }
  return cfg;
}

void write_table_csv(const SimResult& result, std::ostream& out) {
  out << "n,p,tau,estimator,smse,sre,sre_se,n_retry\n";
  for (const auto& pt : result.points) {
    for (Estimator e : {Estimator::kRE, Estimator::kJSE, Estimator::kPJSE, Estimator::kPTE}) {
      const std::size_t k = estimator_index(e);
      out << pt.n << ',' << pt.p << ',' << detail::fmt_num(pt.tau) << ',' << to_string(e) << ','
          << detail::fmt_num(pt.smse[k]) << ',' << detail::fmt_num(pt.sre[k]) << ','
          << detail::fmt_num(pt.sre_se[k]) << ',' << pt.n_retry << '\n';
    }
  }
}

void write_curves_csv(const SimResult& result, std::ostream& out) {
  out << "n,p,estimator,tau,sre,sre_lower,sre_upper,smse\n";
  for (Estimator e : kAllEstimators) {
    const std::size_t k = estimator_index(e);
    for (const auto& pt : result.points) {
      out << pt.n << ',' << pt.p << ',' << to_string(e) << ',' << detail::fmt_num(pt.tau) << ','
          << detail::fmt_num(pt.sre[k]) << ',' << detail::fmt_num(pt.sre[k] - 2.0 * pt.sre_se[k])
          << ',' << detail::fmt_num(pt.sre[k] + 2.0 * pt.sre_se[k]) << ','
          << detail::fmt_num(pt.smse[k]) << '\n';
    }
  }
}

}  // namespace bellshrink
