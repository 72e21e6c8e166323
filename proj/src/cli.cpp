#include "bellshrink/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "bellshrink/application.hpp"
#include "bellshrink/asymptotics.hpp"
#include "bellshrink/bell_glm.hpp"
#include "bellshrink/errors.hpp"
#include "bellshrink/montecarlo.hpp"
#include "bellshrink/special_fn.hpp"
#include "text_format.hpp"

namespace bellshrink {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

using detail::fmt_num;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataFlags {
  std::string data;
  std::string response;
  std::vector<std::string> covariates;
};

void add_data_flags(CLI::App* cmd, DataFlags& flags, bool required) {
  auto* d = cmd->add_option("--data", flags.data, "Input CSV with a header row")
                ->check(CLI::ExistingFile);
  auto* r = cmd->add_option("--response", flags.response, "Name of the count response column");
  auto* c = cmd->add_option("--covariates", flags.covariates,
                            "Covariate column names (comma separated)")
                ->delimiter(',');
  if (required) {
    d->required();
    r->required();
    c->required();
  }
}

std::vector<std::string> coefficient_names(const std::vector<std::string>& covariates) {
  std::vector<std::string> names{"intercept"};
  names.insert(names.end(), covariates.begin(), covariates.end());
  return names;
}

// Writes to --out when given, otherwise to the command's stdout.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot write '" + path + "'");
  file << text;
}

std::string join_row(const std::string& head, const Vector& v) {
  std::string line = head;
  for (Eigen::Index i = 0; i < v.size(); ++i) line += "," + fmt_num(v[i]);
  return line + "\n";
}

std::string header_row(const std::string& head, const std::vector<std::string>& names) {
  std::string line = head;
  for (const auto& n : names) line += "," + n;
  return line + "\n";
}

std::string run_fit(const DataFlags& flags) {
  const LoadedDataset loaded = load_dataset(flags.data, flags.response, flags.covariates);
  const FittedModel model = fit(loaded.data);
  const Matrix cov = spd_inverse(model.fisher_info);
  const auto names = coefficient_names(flags.covariates);

  std::ostringstream s;
  s << "coefficient,estimate,se,z\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double se = std::sqrt(cov(jj, jj));
    s << names[j] << ',' << fmt_num(model.beta[jj]) << ',' << fmt_num(se) << ','
      << fmt_num(model.beta[jj] / se) << '\n';
  }
  s << "\nstatistic,value\n";
  s << "n," << loaded.data.rows() << '\n';
  s << "loglik," << fmt_num(model.loglik) << '\n';
  s << "aic," << fmt_num(aic(model)) << '\n';
  s << "iterations," << model.n_iter << '\n';
  s << "converged," << (model.converged ? "true" : "false") << '\n';
  s << "eta_clamped," << model.n_clamped << '\n';
  s << "jittered," << (model.jittered ? "true" : "false") << '\n';
  s << "overdispersion," << fmt_num(overdispersion_ratio(loaded.data.response())) << '\n';
  return s.str();
}

std::string run_estimate(const DataFlags& flags, const std::string& restriction_path,
                         double alpha) {
  const LoadedDataset loaded = load_dataset(flags.data, flags.response, flags.covariates);
  const LinearRestriction rest = load_restriction(restriction_path);
  if (rest.coefficients() != loaded.data.coefficients()) {
    throw UsageError("restriction has " + std::to_string(rest.coefficients()) +
                     " columns but the model has " +
                     std::to_string(loaded.data.coefficients()) + " coefficients");
  }
  const FittedModel model = fit(loaded.data);
  if (!model.converged) throw NumericalError("Fisher scoring did not converge");
  const EstimatorSet set = compute_all(model, rest, alpha);
  const double p_value = 1.0 - chisq_cdf(set.f_stat, set.r);

  std::ostringstream s;
  s << "statistic,value\n";
  s << "f_stat," << fmt_num(set.f_stat) << '\n';
  s << "df," << set.r << '\n';
  s << "p_value," << fmt_num(p_value) << '\n';
  s << "critical_value," << fmt_num(pretest_critical_value(set.r, alpha)) << '\n';
  s << "alpha," << fmt_num(alpha) << '\n';
  s << "lr_stat," << fmt_num(likelihood_ratio_statistic(model, rest, loaded.data)) << '\n';
  s << '\n' << header_row("estimator", coefficient_names(flags.covariates));
  for (Estimator e : kAllEstimators) {
    if (set.has(e)) {
      s << join_row(std::string(to_string(e)), set.get(e));
    } else {
      s << to_string(e);
      for (Eigen::Index j = 0; j < set.un.size(); ++j) s << ",NA";
      s << '\n';
    }
  }
  return s.str();
}

struct TheoryFlags {
  DataFlags data;
  std::string restriction;
  int toy_r = 0;
  int toy_p = 0;
  std::vector<double> gamma_dir;
  std::vector<double> gamma_scales;
  std::vector<double> deltas;
  double alpha = 0.05;
};

std::string run_theory(const TheoryFlags& flags) {
  std::optional<LinearRestriction> rest;
  Matrix fisher;
  if (flags.toy_r > 0) {
    if (flags.toy_p + 1 < flags.toy_r) throw UsageError("--toy-p must satisfy p + 1 >= r");
    Matrix H = Matrix::Zero(flags.toy_r, flags.toy_p + 1);
    H.leftCols(flags.toy_r).setIdentity();
    rest.emplace(std::move(H), Vector::Zero(flags.toy_r));
    fisher = Matrix::Identity(flags.toy_p + 1, flags.toy_p + 1);
  } else {
    if (flags.restriction.empty() || flags.data.data.empty()) {
      throw UsageError("theory needs either --toy-r/--toy-p or --data with --restriction");
    }
    const LoadedDataset loaded =
        load_dataset(flags.data.data, flags.data.response, flags.data.covariates);
    rest = load_restriction(flags.restriction);
    if (rest->coefficients() != loaded.data.coefficients()) {
      throw UsageError("restriction width does not match the model");
    }
    const FittedModel model = fit(loaded.data);
    if (!model.converged) throw NumericalError("Fisher scoring did not converge");
    fisher = model.fisher_info / static_cast<double>(loaded.data.rows());
  }
  const int r = rest->rank();
  Vector dir = Vector::Ones(r);
  if (!flags.gamma_dir.empty()) {
    if (static_cast<int>(flags.gamma_dir.size()) != r) {
      throw UsageError("--gamma-dir needs " + std::to_string(r) + " entries");
    }
    dir = Eigen::Map<const Vector>(flags.gamma_dir.data(), r);
  }
  if (dir.isZero(0.0)) throw UsageError("--gamma-dir must be non-zero");

  std::vector<double> scales = flags.gamma_scales;
  if (!flags.deltas.empty()) {
    const LocalAlternative unit(dir, fisher, *rest);
    for (double d : flags.deltas) {
      if (d < 0.0) throw UsageError("--delta values must be non-negative");
      scales.push_back(std::sqrt(d / unit.delta()));
    }
  }
  if (scales.empty()) throw UsageError("theory needs --gamma or --delta values");

  const Eigen::Index k = fisher.rows();
  std::ostringstream s;
  s << "estimator,gamma_scale,delta";
  for (Eigen::Index j = 0; j < k; ++j) s << ",bias_" << j;
  s << ",amse_trace\n";
  for (double scale : scales) {
    const LocalAlternative la(scale * dir, fisher, *rest);
    for (Estimator e : kAllEstimators) {
      if (r < 3 && (e == Estimator::kJSE || e == Estimator::kPJSE)) continue;
      const Vector bias = asymptotic_bias(e, la, flags.alpha);
      const Matrix amse = asymptotic_amse(e, la, flags.alpha);
      s << to_string(e) << ',' << fmt_num(scale) << ',' << fmt_num(la.delta());
      for (Eigen::Index j = 0; j < k; ++j) s << ',' << fmt_num(bias[j] == 0.0 ? 0.0 : bias[j]);
      s << ',' << fmt_num(amse.trace()) << '\n';
    }
  }
  return s.str();
}

std::string bre_text(const BREReport& report, const std::vector<std::string>& names,
                     double dispersion) {
  std::ostringstream s;
  s << "statistic,value\n";
  s << "f_stat," << fmt_num(report.full_sample.f_stat) << '\n';
  s << "replications," << report.replications << '\n';
  s << "n_retry," << report.n_retry << '\n';
  s << "restriction_violations," << report.restriction_violations << '\n';
  s << "overdispersion," << fmt_num(dispersion) << "\n\n";
  write_bre_csv(report, names, s);
  return s.str();
}

}  // namespace

LinearRestriction parse_restriction(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  std::string raw;
  std::size_t line = 0;
  auto number = [&](const std::string& tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size() || !std::isfinite(v)) {
      throw ParseError("line " + std::to_string(line) + ": '" + tok + "' is not a number", line);
    }
    return v;
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto bar = text.find('|');
    if (bar == std::string_view::npos || text.find('|', bar + 1) != std::string_view::npos) {
      throw ParseError("line " + std::to_string(line) + ": expected exactly one '|' before h", line);
    }
    std::string lhs(text.substr(0, bar));
    std::replace(lhs.begin(), lhs.end(), ',', ' ');
    std::istringstream tokens(lhs);
    std::vector<double> row;
    for (std::string tok; tokens >> tok;) row.push_back(number(tok));
    if (row.empty()) throw ParseError("line " + std::to_string(line) + ": empty H row", line);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("line " + std::to_string(line) + ": row has " + std::to_string(row.size()) +
                           " entries, expected " + std::to_string(rows.front().size()),
                       line);
    }
    rows.push_back(std::move(row));
    rhs.push_back(number(std::string(detail::trim(text.substr(bar + 1)))));
  }
  if (rows.empty()) throw ParseError("restriction file has no rows", 0);
  Matrix H(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  Vector h = Eigen::Map<const Vector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  try {
    return LinearRestriction(std::move(H), std::move(h));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  } catch (const DomainError& e) {
    throw ParseError(e.what(), 0);
  }
}

LinearRestriction load_restriction(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return parse_restriction(in);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bell regression with restricted and shrinkage estimators", "bellshrink"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bellshrink 1.0.0");

  std::string out_path;
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
  double alpha = 0.05;
  std::string restriction_path;

  DataFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a Bell regression and report coefficients, SEs, log-likelihood and AIC");
  add_data_flags(fit_cmd, fit_flags, true);
  fit_cmd->add_option("--out", out_path, "Write the report here instead of stdout");

  DataFlags est_flags;
  auto* est_cmd = app.add_subcommand("estimate", "Compute UN/RE/PTE/JSE/PJSE and the test statistic");
  add_data_flags(est_cmd, est_flags, true);
  est_cmd->add_option("--restriction", restriction_path, "Restriction file (rows of H | h)")
      ->required()
      ->check(CLI::ExistingFile);
  est_cmd->add_option("--alpha", alpha, "Pretest significance level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  est_cmd->add_option("--out", out_path, "Write the report here instead of stdout");

  TheoryFlags theory;
  auto* th_cmd = app.add_subcommand("theory", "Asymptotic bias and AMSE trace over a gamma or delta sweep");
  add_data_flags(th_cmd, theory.data, false);
  th_cmd->add_option("--restriction", theory.restriction, "Restriction file (with --data)")
      ->check(CLI::ExistingFile);
  th_cmd->add_option("--toy-r", theory.toy_r, "Toy problem: F = I, H = [I_r 0] with this r");
  th_cmd->add_option("--toy-p", theory.toy_p, "Toy problem covariate count p");
  th_cmd->add_option("--gamma-dir", theory.gamma_dir, "Direction of gamma (default all ones)")->delimiter(',');
  th_cmd->add_option("--gamma", theory.gamma_scales, "Scales s with gamma = s * direction")->delimiter(',');
  th_cmd->add_option("--delta", theory.deltas, "Target noncentrality values")->delimiter(',');
  th_cmd->add_option("--alpha", theory.alpha, "Pretest significance level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  th_cmd->add_option("--out", out_path, "Write the CSV here instead of stdout");

  std::string config_path;
  std::string curves_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo SRE study over an (n, p, tau) grid");
  sim_cmd->add_option("--config", config_path, "Simulation config (key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* sim_seed = sim_cmd->add_option("--seed", seed, "Master seed (overrides the config)");
  sim_cmd->add_option("--out", out_path, "Table CSV output path")->required();
  sim_cmd->add_option("--curves", curves_path, "Optional long-format SRE curve CSV");
  sim_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  DataFlags boot_flags;
  int resample_size = 40;
  int replications = 1000;
  bool without_replacement = false;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Bootstrap relative efficiency of the estimator suite");
  add_data_flags(boot_cmd, boot_flags, true);
  boot_cmd->add_option("--restriction", restriction_path, "Restriction file (rows of H | h)")
      ->required()
      ->check(CLI::ExistingFile);
  boot_cmd->add_option("--alpha", alpha, "Pretest significance level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  boot_cmd->add_option("--seed", seed, "Master seed");
  boot_cmd->add_option("--resample-size", resample_size, "Rows per bootstrap sample")->check(CLI::PositiveNumber);
  boot_cmd->add_option("--replications", replications, "Bootstrap replications")->check(CLI::PositiveNumber);
  boot_cmd->add_flag("--without-replacement", without_replacement, "Subsample rows without replacement");
  boot_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  boot_cmd->add_option("--out", out_path, "Write the report here instead of stdout");

  try {
    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error=usage exit=1\n" << e.what() << '\n';
    return 1;
  }

  try {
    if (fit_cmd->parsed()) {
      emit(out_path, run_fit(fit_flags), out);
    } else if (est_cmd->parsed()) {
      emit(out_path, run_estimate(est_flags, restriction_path, alpha), out);
    } else if (th_cmd->parsed()) {
      emit(out_path, run_theory(theory), out);
    } else if (sim_cmd->parsed()) {
      std::ifstream in(config_path);
      SimConfig cfg = parse_sim_config(in);
      if (sim_seed->count() > 0) cfg.seed = seed;
      cfg.threads = threads;
      const SimResult result = run_simulation(cfg);
      std::ostringstream table;
      write_table_csv(result, table);
      emit(out_path, table.str(), out);
      if (!curves_path.empty()) {
        std::ostringstream curves;
        write_curves_csv(result, curves);
        emit(curves_path, curves.str(), out);
      }
    } else if (boot_cmd->parsed()) {
      const LoadedDataset loaded = load_dataset(boot_flags.data, boot_flags.response, boot_flags.covariates);
      BootstrapConfig cfg;
      cfg.restriction = load_restriction(restriction_path);
      if (cfg.restriction->coefficients() != loaded.data.coefficients()) {
        throw UsageError("restriction width does not match the model");
      }
      cfg.alpha = alpha;
      cfg.seed = seed;
      cfg.resample_size = resample_size;
      cfg.replications = replications;
      cfg.with_replacement = !without_replacement;
      cfg.threads = threads;
      if (cfg.resample_size > loaded.data.rows()) {
        throw UsageError("--resample-size exceeds the " + std::to_string(loaded.data.rows()) + " data rows");
      }
      const BREReport report = bootstrap_bre(loaded.data, cfg);
      emit(out_path,
           bre_text(report, coefficient_names(boot_flags.covariates),
                    overdispersion_ratio(loaded.data.response())),
           out);
    }
  } catch (const ParseError& e) {
    err << "error=input exit=1\n" << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    err << "error=usage exit=1\n" << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error=usage exit=1\n" << e.what() << '\n';
    return 1;
  } catch (const SingularMatrixError& e) {
    err << "error=singular exit=2 minor=" << e.leading_minor() << '\n' << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error=domain exit=2\n" << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "error=numerical exit=2\n" << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace bellshrink
