#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qdag/error.hpp"
#include "qdag/simdata.hpp"

using namespace qdag;

TEST_CASE("random DAG parent counts") {
  const auto par = gen_dag(25, 7);
  REQUIRE(par.size() == 25);
  CHECK(par[0].size() == 4);
  CHECK(par[23] == std::vector<int>{24});
  CHECK(par[24].empty());
  for (int h = 0; h + 1 < 25; ++h) {
    // 0-based h here is node h+1: max{1, floor((p - (h+1)) / 5)}
    CHECK(par[h].size() == static_cast<std::size_t>(std::max(1, (25 - (h + 1)) / 5)));
    for (int j : par[h]) CHECK(j > h);
    CHECK(std::adjacent_find(par[h].begin(), par[h].end()) == par[h].end());
  }
  CHECK(is_acyclic(parents_to_adjacency(par)));
  CHECK(gen_dag(25, 7) == par);
  CHECK_THROWS_AS(gen_dag(1, 1), DimensionError);
}

TEST_CASE("covariates are i.i.d. standard normal") {
  const Eigen::MatrixXd x = gen_covariates(100000, 2, 3);
  CHECK(x == gen_covariates(100000, 2, 3));
  for (int k = 0; k < 2; ++k) {
    const double m = x.col(k).mean();
    const double v = (x.col(k).array() - m).square().sum() / (x.rows() - 1);
    CHECK(std::abs(m) < 0.02);
    CHECK(std::abs(v - 1.0) < 0.03);
  }
  const Eigen::VectorXd a = x.col(0).array() - x.col(0).mean();
  const Eigen::VectorXd b = x.col(1).array() - x.col(1).mean();
  CHECK(std::abs(a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm())) < 0.02);
}

TEST_CASE("true coefficient surfaces") {
  Eigen::RowVectorXd x(3);
  x << 0.0, 0.7, -1.3;
  CHECK(true_theta({0, {}}, x, 0.5) == 1.25);
  CHECK(true_theta({1, {0}}, x, 0.5) == doctest::Approx(std::log(1.25)));
  const double direct = 1.3 * 1.3 + std::log(1.0 + 0.04) + std::exp(0.0) + std::log(0.7);
  CHECK(std::abs(true_theta({3, {2, 0, 1}}, x, 0.2) - direct) < 1e-14);
  x << 0.0, 0.0, 0.0;
  CHECK(std::isfinite(true_theta({3, {0, 1, 2}}, x, 0.5)));
  CHECK_THROWS_AS(true_theta({4, {0, 1, 2, 0}}, x, 0.5), InputError);
  CHECK_THROWS_AS(true_theta({2, {0}}, x, 0.5), InputError);
}

TEST_CASE("response generation and truth") {
  SimSettings s;
  s.p = 6;
  s.n = 80;
  s.q = 2;
  s.seed = 5;
  const SimDataset ds = simulate(s);
  const SimDataset again = simulate(s);
  CHECK(ds.y == again.y);
  CHECK(ds.x == again.x);
  CHECK(ds.truth.threshold == 0.5);
  CHECK(ds.y.allFinite());
  const SimTruth& t = ds.truth;
  REQUIRE(t.tau_grid.size() == 9);

  // the last node is its own intercept model
  for (int i = 0; i < s.n; ++i) {
    const double th = true_theta(t.intercept_forms[5], ds.x.row(i), t.tau_draws(i, 5));
    CHECK(ds.y(i, 5) == (std::abs(th) > 0.5 ? th : 0.0));
  }
  // truth on the grid: betas threshold thetas; quantiles by an independent loop
  for (std::size_t g = 0; g < t.tau_grid.size(); ++g) {
    double worst = 0.0;
    for (int i = 0; i < s.n; ++i)
      for (int h = 0; h < s.p; ++h) {
        double qv = t.beta0[g](i, h);
        for (int j = 0; j < s.p; ++j) {
          const double th = t.theta[g](i, h, j), be = t.beta[g](i, h, j);
          CHECK((be == 0.0 || be == th));
          if (std::abs(th) > 0.5) CHECK(be == th);
          qv += ds.y(i, j) * be;
        }
        worst = std::max(worst, std::abs(qv - t.quantile[g](i, h)));
      }
    CHECK(worst < 1e-12);
  }
  for (int h = 0; h < s.p; ++h)
    if (t.intercept_forms[h].q_star == 0)
      CHECK(t.theta0[0](0, h) == doctest::Approx(1.01));
}

TEST_CASE("thresholds above every surface leave intercepts only") {
  const auto parents = gen_dag(4, 2);
  const Eigen::MatrixXd x = gen_covariates(30, 2, 2);
  std::vector<ThetaForm> icpt(4, ThetaForm{0, {}});
  std::vector<ThetaForm> edges(16, ThetaForm{0, {}});
  const SimDataset ds = gen_responses(parents, x, icpt, edges, 100.0, 9);
  CHECK((ds.y.array() == 0.0).all());
  for (const auto& b : ds.truth.beta)
    for (double v : b.data()) CHECK(v == 0.0);
}

TEST_CASE("conditional quantiles of a child match the truth") {
  // p = 3 chain with constant forms: Y1 = b0 + Y2 b12 + Y3 b13 at the latent level
  const int n = 10000;
  std::vector<std::vector<int>> parents{{1, 2}, {2}, {}};
  const Eigen::MatrixXd x = gen_covariates(n, 2, 4);
  std::vector<ThetaForm> icpt(3, ThetaForm{0, {}});
  std::vector<ThetaForm> edges(9, ThetaForm{0, {}});
  const SimDataset ds = gen_responses(parents, x, icpt, edges, 0.5, 12);
  // Y1 given its (positive) parents is increasing in its latent level, so
  // P(Y1 <= q_true(tau) | parents) = tau for every individual.
  for (std::size_t g = 0; g < ds.truth.tau_grid.size(); ++g) {
    const double tau = ds.truth.tau_grid[g];
    int below = 0, total = 0;
    for (int i = 0; i < n; ++i) {
      ++total;
      below += ds.y(i, 0) <= ds.truth.quantile[g](i, 0);
    }
    CAPTURE(tau);
    REQUIRE(total == n);
    CHECK(std::abs(below / double(total) - tau) < 0.05);
  }
}

TEST_CASE("replicate seeds are distinct") {
  CHECK(replicate_seed(1, 1) != replicate_seed(1, 2));
  CHECK(replicate_seed(1, 1) == replicate_seed(1, 1));
  CHECK(replicate_seed(1, 1) != replicate_seed(2, 1));
}
