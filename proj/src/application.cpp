#include "bellshrink/application.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "bellshrink/errors.hpp"
#include "bellshrink/parallel.hpp"
#include "bellshrink/rng.hpp"
#include "text_format.hpp"

namespace bellshrink {

namespace {

std::string unquote(std::string field) {
  if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
    field = field.substr(1, field.size() - 2);
  }
  return field;
}

double parse_cell(const std::string& cell, const std::string& column, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": column '" + column + "' value '" + cell +
                         "' is not a number",
                     line);
  }
  return v;
}

constexpr double kRestrictionTolerance = 1e-8;

}  // namespace

LoadedDataset load_dataset(std::istream& in, const std::string& response,
                           const std::vector<std::string>& covariates) {
  std::string raw;
  std::size_t line = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, raw)) {
    ++line;
    if (line == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    if (detail::trim(raw).empty()) continue;
    for (auto& f : detail::split(raw, ',')) header.push_back(unquote(f));
  }
  if (header.empty()) throw ParseError("empty file: no header row", 0);
  const std::size_t header_line = line;

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError("line " + std::to_string(header_line) + ": missing column '" + name + "'",
                       header_line);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t y_col = column_of(response);
  std::vector<std::size_t> x_cols;
  for (const auto& c : covariates) x_cols.push_back(column_of(c));

  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  while (std::getline(in, raw)) {
    ++line;
    if (detail::trim(raw).empty()) continue;
    auto fields = detail::split(raw, ',');
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line) + ": expected " +
                           std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line);
    }
    for (auto& f : fields) f = unquote(f);
    const double y = parse_cell(fields[y_col], response, line);
    if (y < 0.0 || y != std::floor(y)) {
      throw ParseError("line " + std::to_string(line) + ": response '" + fields[y_col] +
                           "' is not a non-negative integer count",
                       line);
    }
    ys.push_back(y);
    std::vector<double> row;
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      row.push_back(parse_cell(fields[x_cols[k]], covariates[k], line));
    }
    xs.push_back(std::move(row));
  }
  if (ys.empty()) throw ParseError("no data rows after the header", header_line);

  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto k = static_cast<Eigen::Index>(covariates.size());
  Matrix x(n, k + 1);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < k; ++j) x(i, j + 1) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y[i] = ys[static_cast<std::size_t>(i)];
  }
  try {
    return LoadedDataset{Dataset(std::move(x), std::move(y)), response, covariates};
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
}

LoadedDataset load_dataset(const std::string& path, const std::string& response,
                           const std::vector<std::string>& covariates) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return load_dataset(in, response, covariates);
}

double overdispersion_ratio(const Vector& counts) {
  if (counts.size() < 2) throw std::invalid_argument("overdispersion needs at least two counts");
  const double mean = counts.mean();
  const double var = (counts.array() - mean).square().sum() / static_cast<double>(counts.size() - 1);
  return var / mean;
}

LinearRestriction zero_restriction(Eigen::Index coefficients,
                                   const std::vector<Eigen::Index>& indices) {
  Matrix H = Matrix::Zero(static_cast<Eigen::Index>(indices.size()), coefficients);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= coefficients) {
      throw std::invalid_argument("restricted coefficient index out of range");
    }
    H(static_cast<Eigen::Index>(i), indices[i]) = 1.0;
  }
  return LinearRestriction(std::move(H), Vector::Zero(static_cast<Eigen::Index>(indices.size())));
}

const BootstrapEstimate& BREReport::get(Estimator e) const {
  for (const auto& est : estimators) {
    if (est.estimator == e) return est;
  }
  throw std::out_of_range("estimator not in report");
}

BREReport bootstrap_bre(const Dataset& data, const BootstrapConfig& cfg) {
  if (!cfg.restriction) throw std::invalid_argument("bootstrap needs a restriction");
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (cfg.resample_size < 1 || cfg.resample_size > data.rows()) {
    throw std::invalid_argument("resample size must lie in [1, " + std::to_string(data.rows()) + "]");
  }
  const LinearRestriction& rest = *cfg.restriction;
  const Eigen::Index k = data.coefficients();

  const FittedModel full = fit(data);
  if (!full.converged) throw NumericalError("full-sample fit did not converge");

  BREReport report;
  report.full_sample = compute_all(full, rest, cfg.alpha);
  report.replications = cfg.replications;
  const Vector truth = cfg.pseudo_truth ? *cfg.pseudo_truth : full.beta;
  if (truth.size() != k) throw std::invalid_argument("pseudo truth has the wrong length");

  struct Replicate {
    std::array<Vector, 5> values;
    std::array<bool, 5> present{};
    double residual = 0.0;
    int retries = 0;
  };
  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<Replicate> draws(reps);
  const int max_attempts = std::max(20, static_cast<int>(std::ceil(cfg.max_failure_fraction * cfg.replications)) + 1);

  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      RandomStream rng = substream(cfg.seed, {rep, static_cast<std::uint64_t>(attempt)});
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(cfg.resample_size));
      if (cfg.with_replacement) {
        std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
        for (auto& r : rows) r = pick(rng);
      } else {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(data.rows()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        std::shuffle(all.begin(), all.end(), rng);
        std::copy_n(all.begin(), rows.size(), rows.begin());
        std::sort(rows.begin(), rows.end());
      }
      try {
        const Dataset sample = data.subset(rows);
        const FittedModel model = fit(sample);
        if (!model.converged) continue;
        const EstimatorSet set = compute_all(model, rest, cfg.alpha);
        Replicate out;
        for (std::size_t idx = 0; idx < kAllEstimators.size(); ++idx) {
          const Estimator e = kAllEstimators[idx];
          if (set.has(e)) {
            out.values[idx] = set.get(e);
            out.present[idx] = true;
          }
        }
        out.residual = (rest.matrix() * set.re - rest.rhs()).cwiseAbs().maxCoeff();
        out.retries = attempt;
        draws[rep] = std::move(out);
        return;
      } catch (const SingularMatrixError&) {
      } catch (const NumericalError&) {
      } catch (const std::invalid_argument&) {
        // resample with too few distinct rows for the design
      }
    }
    throw NumericalError("bootstrap replication " + std::to_string(rep) + " failed " +
                         std::to_string(max_attempts) + " consecutive fits");
  });

  for (const auto& d : draws) {
    report.n_retry += d.retries;
    report.max_restriction_residual = std::max(report.max_restriction_residual, d.residual);
    if (d.residual > kRestrictionTolerance) ++report.restriction_violations;
  }
  if (report.n_retry > cfg.max_failure_fraction * cfg.replications) {
    throw NumericalError(std::to_string(report.n_retry) + " failed bootstrap fits exceed the " +
                         detail::fmt_num(100.0 * cfg.max_failure_fraction) + "% limit");
  }

  const double count = static_cast<double>(reps);
  std::vector<double> scratch(reps);
  for (std::size_t idx = 0; idx < kAllEstimators.size(); ++idx) {
    BootstrapEstimate est;
    est.estimator = kAllEstimators[idx];
    est.available = report.full_sample.has(est.estimator);
    if (!est.available) {
      report.estimators.push_back(std::move(est));
      continue;
    }
    est.estimate = report.full_sample.get(est.estimator);
    est.se = Vector::Zero(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < reps; ++i) scratch[i] = draws[i].values[idx][j];
      const double mean = pairwise_sum(scratch) / count;
      for (std::size_t i = 0; i < reps; ++i) scratch[i] = (scratch[i] - mean) * (scratch[i] - mean);
      est.se[j] = reps > 1 ? std::sqrt(pairwise_sum(scratch) / (count - 1.0)) : 0.0;
    }
    for (std::size_t i = 0; i < reps; ++i) scratch[i] = (draws[i].values[idx] - truth).squaredNorm();
    est.smse = pairwise_sum(scratch) / count;
    report.estimators.push_back(std::move(est));
  }
  const double un_smse = report.estimators.front().smse;
  for (auto& est : report.estimators) {
    if (!est.available) continue;
    if (est.estimator == Estimator::kUN) {
      est.bre = 1.0;
    } else if (est.smse > 0.0) {
      est.bre = un_smse / est.smse;
    } else {
      est.bre = un_smse > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
  }
  return report;
}

void write_bre_csv(const BREReport& report, const std::vector<std::string>& coefficient_names,
                   std::ostream& out) {
  out << "estimator,coefficient,estimate,se,bre\n";
  for (const auto& est : report.estimators) {
    const std::string name(to_string(est.estimator));
    if (!est.available) {
      for (const auto& c : coefficient_names) out << name << ',' << c << ",NA,NA,NA\n";
      continue;
    }
    if (static_cast<Eigen::Index>(coefficient_names.size()) != est.estimate.size()) {
      throw std::invalid_argument("coefficient name count does not match the model");
    }
    for (std::size_t j = 0; j < coefficient_names.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out << name << ',' << coefficient_names[j] << ',' << detail::fmt_num(est.estimate[jj]) << ','
          << detail::fmt_num(est.se[jj]) << ',' << detail::fmt_num(est.bre) << '\n';
    }
  }
}

}  // namespace bellshrink
