#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "bellshrink/errors.hpp"
#include "bellshrink/montecarlo.hpp"

using namespace bellshrink;

namespace {

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("restriction of the simulation design") {
  const LinearRestriction r = build_restriction(3, 0.4);
  Matrix expect(3, 4);
  expect << 1, 0, 0, 0,
            0, 1, -1, 0,
            0, 0, 1, -1;
  CHECK(r.matrix() == expect);
  CHECK(r.rhs() == Vector((Vector(3) << 0.4, 0.0, 0.0).finished()));
  for (int p : {3, 6, 12}) {
    const LinearRestriction rp = build_restriction(p, 0.0);
    CHECK(rp.rank() == p);
    CHECK(Eigen::FullPivLU<Matrix>(rp.matrix()).rank() == p);
    CHECK((rp.matrix() * default_true_beta(p) - rp.rhs()).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(build_restriction(2, 0.0), DomainError);
  CHECK(default_true_beta(3) == Vector((Vector(4) << 0, 1, 1, 1).finished()));
}

TEST_CASE("generated data") {
  const Vector beta = default_true_beta(3);
  RandomStream a = substream(1, {2, 3});
  RandomStream b = substream(1, {2, 3});
  const Dataset da = generate_dataset(500, 3, beta, a);
  const Dataset db = generate_dataset(500, 3, beta, b);
  CHECK(da.design() == db.design());
  CHECK(da.response() == db.response());
  for (int j = 1; j <= 3; ++j) CHECK(std::fabs(da.design().col(j).mean()) < 4.0 / std::sqrt(500.0));

  // Mean count equals E[exp(x'beta)] = exp(|beta|^2 / 2) for standard normal x.
  RandomStream c = substream(2, {});
  const Dataset big = generate_dataset(100'000, 3, beta, c);
  const Vector& y = big.response();
  const double mean = y.mean();
  const double sd = std::sqrt((y.array() - mean).square().sum() / (y.size() - 1.0));
  CHECK(std::fabs(mean - std::exp(1.5)) < 4.0 * sd / std::sqrt(static_cast<double>(y.size())));
}

TEST_CASE("grid point invariants") {
  SimConfig cfg;
  cfg.replications = 300;
  for (double tau : {0.0, 0.5}) {
    const GridPointResult g = run_grid_point(cfg, 0, 60, 3, tau);
    CHECK(g.sre[estimator_index(Estimator::kUN)] == 1.0);
    for (int e = 0; e < 5; ++e) {
      CHECK(g.smse[e] > 0.0);
      CHECK(std::isfinite(g.smse[e]));
      CHECK(std::fabs(g.sre[e] - g.smse[0] / g.smse[e]) <= 1e-12 * g.sre[e]);
      CHECK(g.sre_se[e] >= 0.0);
    }
  }
  CHECK(estimator_index(Estimator::kUN) == 0);
  CHECK(estimator_index(Estimator::kPTE) == 4);
}

TEST_CASE("positive part beats plain Stein at the null and RE degrades with tau") {
  SimConfig cfg;
  cfg.n_grid = {50, 100};
  cfg.p_grid = {3, 6};
  cfg.tau_grid = {0.0, 0.5, 1.0};
  cfg.replications = 300;
  const SimResult res = run_simulation(cfg);
  REQUIRE(res.points.size() == 12);
  const auto re = estimator_index(Estimator::kRE);
  const auto jse = estimator_index(Estimator::kJSE);
  const auto pjse = estimator_index(Estimator::kPJSE);
  for (std::size_t i = 0; i < res.points.size(); i += 3) {
    const auto& t0 = res.points[i];
    const auto& t5 = res.points[i + 1];
    const auto& t1 = res.points[i + 2];
    CHECK(t0.tau == 0.0);
    CHECK(t1.tau == 1.0);
    const double slack = 2.0 * std::hypot(t0.sre_se[pjse], t0.sre_se[jse]);
    CHECK(t0.sre[pjse] >= t0.sre[jse] - slack);
    CHECK(t0.sre[re] > t5.sre[re]);
    CHECK(t5.sre[re] > t1.sre[re]);
  }
}

TEST_CASE("results do not depend on the thread count") {
  SimConfig cfg;
  cfg.n_grid = {50};
  cfg.p_grid = {3, 6};
  cfg.tau_grid = {0.0, 0.3};
  cfg.replications = 80;
  cfg.threads = 1;
  std::ostringstream one;
  write_table_csv(run_simulation(cfg), one);
  cfg.threads = 4;
  std::ostringstream four;
  write_table_csv(run_simulation(cfg), four);
  CHECK(one.str() == four.str());
}

TEST_CASE("fixed design is reproducible and differs from random design") {
  SimConfig cfg;
  cfg.replications = 50;
  cfg.fixed_design = true;
  const GridPointResult a = run_grid_point(cfg, 0, 50, 3, 0.0);
  const GridPointResult b = run_grid_point(cfg, 0, 50, 3, 0.0);
  CHECK(a.smse == b.smse);
  cfg.fixed_design = false;
  const GridPointResult c = run_grid_point(cfg, 0, 50, 3, 0.0);
  CHECK(a.smse != c.smse);
}

TEST_CASE("doubling replications stays within pooled error") {
  SimConfig cfg;
  cfg.replications = 500;
  const GridPointResult small = run_grid_point(cfg, 0, 100, 3, 0.2);
  cfg.replications = 1000;
  const GridPointResult large = run_grid_point(cfg, 0, 100, 3, 0.2);
  for (int e = 1; e < 5; ++e) {
    const double pooled = std::hypot(small.sre_se[e], large.sre_se[e]);
    CHECK(std::fabs(small.sre[e] - large.sre[e]) < 3.0 * pooled);
  }
}

TEST_CASE("config parsing") {
  std::istringstream in(
      "# grid\n"
      "n = 50, 100\n"
      "p = 3\n"
      "tau = 0, 0.5 , 1\n"
      "replications = 20   # quick\n"
      "alpha = 0.1\n"
      "seed = 99\n"
      "fixed_design = true\n"
      "beta = 0.5, 1, 1, 1\n");
  const SimConfig cfg = parse_sim_config(in);
  CHECK(cfg.n_grid == std::vector<int>{50, 100});
  CHECK(cfg.p_grid == std::vector<int>{3});
  CHECK(cfg.tau_grid == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(cfg.replications == 20);
  CHECK(cfg.alpha == 0.1);
  CHECK(cfg.seed == 99u);
  CHECK(cfg.fixed_design);
  REQUIRE(cfg.true_beta);
  CHECK((*cfg.true_beta)[0] == 0.5);

  auto error_line = [](const std::string& text) -> std::size_t {
    std::istringstream s(text);
    try {
      parse_sim_config(s);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 9999;
  };
  CHECK(error_line("n = 50\np = 3\nbogus = 1\n") == 3);
  CHECK(error_line("n = 50\nno equals sign\n") == 2);
  CHECK(error_line("n = fifty\n") == 1);
  CHECK(error_line("n = 50\nreplications = 1, 2\n") == 2);
  CHECK(error_line("n = 50\np = 2\n") == 0);
  CHECK(error_line("n = 4\np = 3\n") == 0);
  CHECK(error_line("n = 50\np = 3, 6\nbeta = 0, 1, 1, 1\n") == 0);
  CHECK(error_line("alpha = 1.5\n") == 0);
}

TEST_CASE("table output has one row per shrinkage estimator and grid point") {
  SimConfig cfg;
  cfg.n_grid = {50, 100, 200};
  cfg.p_grid = {3, 6, 12};
  cfg.tau_grid.clear();
  for (int i = 0; i <= 10; ++i) cfg.tau_grid.push_back(i / 10.0);
  cfg.replications = 1;
  const SimResult res = run_simulation(cfg);
  std::ostringstream table;
  write_table_csv(res, table);
  CHECK(count_lines(table.str()) == 1 + 396);
  CHECK(table.str().rfind("n,p,tau,estimator,smse,sre,sre_se,n_retry\n", 0) == 0);

  std::ostringstream curves;
  write_curves_csv(res, curves);
  CHECK(count_lines(curves.str()) == 1 + 99 * 5);
  CHECK(curves.str().rfind("n,p,estimator,tau,sre,sre_lower,sre_upper,smse\n", 0) == 0);
}
