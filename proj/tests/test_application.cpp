#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "bellshrink/application.hpp"
#include "bellshrink/bell_dist.hpp"
#include "bellshrink/errors.hpp"

using namespace bellshrink;

namespace {

std::size_t parse_error_line(const std::string& text, const std::vector<std::string>& cov = {"x"}) {
  std::istringstream in(text);
  try {
    load_dataset(in, "y", cov);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 9999;
}

// Four covariates, beta_1 = beta_3 = 0.
Dataset synthetic(int n, std::uint64_t seed) {
  RandomStream rng = substream(seed, {});
  std::normal_distribution<double> z(0.0, 1.0);
  Vector beta(5);
  beta << 0.4, 0.0, 0.5, 0.0, -0.3;
  Matrix x(n, 5);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j < 5; ++j) x(i, j) = z(rng);
    y[i] = static_cast<double>(sample(BellParam::from_mean(std::exp(x.row(i).dot(beta))), rng));
  }
  return Dataset(x, y);
}

}  // namespace

TEST_CASE("csv round trip") {
  std::istringstream in("y,x,unused\n0,0.5,a\n3,-1.25,b\n7,2,c\n");
  const LoadedDataset ld = load_dataset(in, "y", {"x"});
  CHECK(ld.data.rows() == 3);
  CHECK(ld.data.coefficients() == 2);
  Matrix x(3, 2);
  x << 1, 0.5,
       1, -1.25,
       1, 2;
  CHECK(ld.data.design() == x);
  CHECK(ld.data.response() == Vector((Vector(3) << 0, 3, 7).finished()));
  CHECK(ld.response == "y");
  CHECK(ld.covariates == std::vector<std::string>{"x"});
}

TEST_CASE("csv quirks: BOM, quotes, CRLF, blank lines, column order") {
  std::istringstream in("\xEF\xBB\xBF\"x\",\"y\"\r\n\r\n1.5,2\r\n-2,0\r\n\n3,4\r\n");
  const LoadedDataset ld = load_dataset(in, "y", {"x"});
  CHECK(ld.data.rows() == 3);
  CHECK(ld.data.design()(0, 1) == 1.5);
  CHECK(ld.data.response()[2] == 4.0);
}

TEST_CASE("csv errors carry line numbers") {
  CHECK(parse_error_line("y,x\n1,2\n-1,3\n2,2\n") == 3);
  CHECK(parse_error_line("y,x\n1,2\n1.5,3\n2,2\n") == 3);
  CHECK(parse_error_line("y,x\n1,2\n1,abc\n2,2\n") == 3);
  CHECK(parse_error_line("y,x\n1,2\n1,2,3\n2,2\n") == 3);
  CHECK(parse_error_line("y,x\n1,\n") == 2);
  CHECK(parse_error_line("y,z\n1,2\n", {"x"}) == 1);
  CHECK(parse_error_line("\n\ny,z\n1,2\n", {"x"}) == 3);
  CHECK(parse_error_line("") == 0);
  CHECK(parse_error_line("y,x\n") == 1);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv", "y", {"x"}), ParseError);
  try {
    std::istringstream in("y,x\n1,2\n-4,3\n");
    load_dataset(in, "y", {"x"});
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("overdispersion ratio") {
  Vector c(4);
  c << 1, 2, 3, 6;
  // mean 3, sample variance 14/3
  CHECK(overdispersion_ratio(c) == doctest::Approx(14.0 / 9.0));
  CHECK_THROWS_AS(overdispersion_ratio(Vector::Ones(1)), std::invalid_argument);
}

TEST_CASE("zero restriction selects coordinates") {
  const LinearRestriction r = zero_restriction(5, {1, 3});
  Matrix expect = Matrix::Zero(2, 5);
  expect(0, 1) = 1.0;
  expect(1, 3) = 1.0;
  CHECK(r.matrix() == expect);
  CHECK(r.rhs() == Vector::Zero(2));
  CHECK_THROWS_AS(zero_restriction(5, {5}), std::invalid_argument);
}

TEST_CASE("degenerate bootstrap reproduces the full-sample fit") {
  const Dataset d = synthetic(120, 1);
  BootstrapConfig cfg;
  cfg.restriction = zero_restriction(5, {1, 3});
  cfg.replications = 1;
  cfg.resample_size = static_cast<int>(d.rows());
  cfg.with_replacement = false;
  const BREReport rep = bootstrap_bre(d, cfg);
  CHECK(rep.n_retry == 0);
  for (const auto& est : rep.estimators) {
    if (!est.available) continue;
    CHECK(std::isfinite(est.bre));
    CHECK(est.se.cwiseAbs().maxCoeff() == 0.0);
  }
  // UN replicate equals the pseudo truth, so its squared error is zero.
  CHECK(rep.get(Estimator::kUN).smse == 0.0);
  CHECK(rep.get(Estimator::kUN).bre == 1.0);
}

TEST_CASE("synthetic bootstrap: restricted estimator wins and restriction holds") {
  const Dataset d = synthetic(300, 2);
  BootstrapConfig cfg;
  cfg.restriction = zero_restriction(5, {1, 3});
  cfg.replications = 200;
  const BREReport rep = bootstrap_bre(d, cfg);
  CHECK(rep.replications == 200);
  CHECK(rep.restriction_violations == 0);
  CHECK(rep.max_restriction_residual <= 1e-8);
  CHECK(rep.get(Estimator::kUN).bre == 1.0);
  CHECK(rep.get(Estimator::kRE).bre > 1.0);
  CHECK_FALSE(rep.get(Estimator::kJSE).available);
  CHECK_FALSE(rep.get(Estimator::kPJSE).available);
  for (const auto& est : rep.estimators) {
    if (est.available) CHECK(est.se.minCoeff() >= 0.0);
  }

  std::ostringstream csv;
  write_bre_csv(rep, {"intercept", "x1", "x2", "x3", "x4"}, csv);
  const std::string text = csv.str();
  CHECK(text.rfind("estimator,coefficient,estimate,se,bre\n", 0) == 0);
  CHECK(text.find("JSE,x1,NA,NA,NA\n") != std::string::npos);
  CHECK_THROWS_AS(write_bre_csv(rep, {"intercept"}, csv), std::invalid_argument);
}

TEST_CASE("bootstrap is reproducible across thread counts") {
  const Dataset d = synthetic(200, 3);
  BootstrapConfig cfg;
  cfg.restriction = zero_restriction(5, {1, 2, 3});
  cfg.replications = 60;
  cfg.threads = 1;
  std::ostringstream a;
  write_bre_csv(bootstrap_bre(d, cfg), {"b0", "b1", "b2", "b3", "b4"}, a);
  cfg.threads = 3;
  std::ostringstream b;
  write_bre_csv(bootstrap_bre(d, cfg), {"b0", "b1", "b2", "b3", "b4"}, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("PJSE,b0,NA") == std::string::npos);
}

TEST_CASE("bootstrap config validation") {
  const Dataset d = synthetic(100, 4);
  BootstrapConfig cfg;
  CHECK_THROWS_AS(bootstrap_bre(d, cfg), std::invalid_argument);
  cfg.restriction = zero_restriction(5, {1});
  cfg.resample_size = 101;
  CHECK_THROWS_AS(bootstrap_bre(d, cfg), std::invalid_argument);
  cfg.resample_size = 40;
  cfg.replications = 0;
  CHECK_THROWS_AS(bootstrap_bre(d, cfg), std::invalid_argument);
}
