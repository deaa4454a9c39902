#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "qdag/aggregate.hpp"
#include "qdag/error.hpp"

using namespace qdag;

namespace {

Adjacency from_edges(int p, std::initializer_list<std::pair<int, int>> edges) {
  Adjacency a(p);
  for (auto [h, j] : edges) a.set(h, j);
  return a;
}

Adjacency random_dag(int p, std::mt19937_64& gen) {
  std::bernoulli_distribution on(0.4);
  Adjacency a(p);
  for (int h = 0; h < p; ++h)
    for (int j = h + 1; j < p; ++j)
      if (on(gen)) a.set(h, j);
  return a;
}

AggregatedDag weights(const Eigen::MatrixXd& w) {
  AggregatedDag a;
  a.weights = w;
  return a;
}

}  // namespace

TEST_CASE("representative draw") {
  const Adjacency a = from_edges(3, {{0, 1}});
  CHECK(representative_draw({a, a, a}) == a);

  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Adjacency> draws;
    for (int k = 0; k < 3 + rep % 4; ++k) draws.push_back(random_dag(4, gen));
    // brute force: mean indicator matrix, then the first minimizer
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(4, 4);
    for (const auto& d : draws)
      for (int h = 0; h < 4; ++h)
        for (int j = 0; j < 4; ++j) mean(h, j) += d(h, j);
    mean /= draws.size();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < draws.size(); ++k) {
      double s = 0;
      for (int h = 0; h < 4; ++h)
        for (int j = 0; j < 4; ++j) s += (draws[k](h, j) - mean(h, j)) * (draws[k](h, j) - mean(h, j));
      if (s < best_d) {
        best_d = s;
        best = k;
      }
    }
    std::size_t idx = 99;
    CHECK(representative_draw(draws, &idx) == draws[best]);
    CHECK(idx == best);
  }

  // two equidistant draws: the earlier one wins
  const Adjacency b = from_edges(3, {{1, 2}});
  std::size_t idx = 9;
  representative_draw({a, b}, &idx);
  CHECK(idx == 0);
  CHECK_THROWS_AS(representative_draw({}), InputError);
}

TEST_CASE("aggregation is an elementwise mean") {
  const AggregatedDag two = aggregate_dags({from_edges(3, {{0, 1}}), from_edges(3, {{1, 2}})}, 0.3);
  CHECK(two.tau == 0.3);
  CHECK(two.weights(0, 1) == 0.5);
  CHECK(two.weights(1, 2) == 0.5);
  CHECK(two.weights.sum() == 1.0);

  const Adjacency a = from_edges(4, {{0, 1}, {2, 3}});
  const AggregatedDag same = aggregate_dags({a, a, a});
  for (int h = 0; h < 4; ++h)
    for (int j = 0; j < 4; ++j) CHECK(same.weights(h, j) == (a(h, j) ? 1.0 : 0.0));

  std::mt19937_64 gen(8);
  std::vector<Adjacency> reps;
  for (int i = 0; i < 5; ++i) reps.push_back(random_dag(5, gen));
  const AggregatedDag agg = aggregate_dags(reps);
  for (int h = 0; h < 5; ++h)
    for (int j = 0; j < 5; ++j) {
      int c = 0;
      for (const auto& r : reps) c += r(h, j);
      CHECK(agg.weights(h, j) == c / 5.0);
    }
  std::reverse(reps.begin(), reps.end());
  CHECK(aggregate_dags(reps).weights == agg.weights);
}

TEST_CASE("hub ranking") {
  const int p = 5;
  std::vector<AggregatedDag> aggs;
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  for (int t = 0; t < 9; ++t) {
    Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(p, p, [&] { return u(gen); });
    w.diagonal().setZero();
    w.row(2).array() += 1.0;  // node 2 has the most parents everywhere
    w(2, 2) = 0.0;
    aggs.push_back(weights(w));
  }
  const auto hubs = hub_rank(aggs, Degree::in);
  REQUIRE_FALSE(hubs.empty());
  CHECK(hubs.front().node == 2);
  CHECK(hubs.front().appearances == 9);

  // enumeration oracle over the same aggregates, for both degree kinds
  for (Degree deg : {Degree::in, Degree::out}) {
    std::vector<int> count(p, 0);
    std::vector<double> sum(p, 0.0);
    for (const auto& a : aggs) {
      std::vector<std::pair<double, int>> d;
      for (int h = 0; h < p; ++h) {
        double s = 0;
        for (int o = 0; o < p; ++o) s += deg == Degree::in ? a.weights(h, o) : a.weights(o, h);
        d.push_back({-s, h});
        sum[h] += s;
      }
      std::sort(d.begin(), d.end());
      for (int r = 0; r < 3; ++r) count[d[r].second]++;
    }
    std::set<int> expect;
    for (int h = 0; h < p; ++h)
      if (count[h] >= 4) expect.insert(h);
    std::set<int> got;
    for (const auto& e : hub_rank(aggs, deg)) {
      got.insert(e.node);
      CHECK(e.appearances == count[e.node]);
      CHECK(e.degree_sum == doctest::Approx(sum[e.node]));
    }
    CHECK(got == expect);
  }

  // a node in the top three at exactly three levels is left out
  std::vector<AggregatedDag> few;
  for (int t = 0; t < 9; ++t) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, p);
    w(0, 1) = 3;  // node 0 always first
    w(1, 0) = 2;  // node 1 always second
    w(2, 0) = 1;  // node 2 always third
    if (t < 3) {
      w(3, 0) = 1.5;  // node 3 displaces node 2 at three levels
    }
    few.push_back(weights(w));
  }
  std::set<int> nodes;
  for (const auto& e : hub_rank(few, Degree::in)) nodes.insert(e.node);
  CHECK(nodes == std::set<int>{0, 1, 2});
}

TEST_CASE("edge prevalence") {
  const int p = 3;
  const Adjacency e01 = from_edges(p, {{0, 1}});
  const Adjacency none(p);

  std::vector<std::vector<Adjacency>> always(9, std::vector<Adjacency>(4, e01));
  auto res = edge_prevalence(always);
  REQUIRE(res.size() == 1);
  CHECK(res[0].child == 0);
  CHECK(res[0].parent == 1);
  CHECK(res[0].quantiles == 9);

  // half the patients at exactly four levels
  std::vector<std::vector<Adjacency>> four(9, std::vector<Adjacency>(4, none));
  for (int t = 0; t < 4; ++t) four[t] = {e01, e01, none, none};
  CHECK(edge_prevalence(four).empty());
  four[4] = {e01, none, e01, none};
  CHECK(edge_prevalence(four).size() == 1);

  std::mt19937_64 gen(21);
  std::vector<std::vector<Adjacency>> reps(9);
  for (auto& r : reps)
    for (int i = 0; i < 4; ++i) r.push_back(random_dag(p, gen));
  std::vector<std::pair<int, int>> expect;
  for (int h = 0; h < p; ++h)
    for (int j = 0; j < p; ++j) {
      if (h == j) continue;
      int levels = 0;
      for (const auto& r : reps) {
        int c = 0;
        for (const auto& a : r) c += a(h, j);
        levels += c * 2 >= 4;
      }
      if (levels >= 5) expect.push_back({h, j});
    }
  std::vector<std::pair<int, int>> got;
  for (const auto& e : edge_prevalence(reps)) got.push_back({e.child, e.parent});
  CHECK(got == expect);
  // patient order does not matter
  for (auto& r : reps) std::reverse(r.begin(), r.end());
  std::vector<std::pair<int, int>> again;
  for (const auto& e : edge_prevalence(reps)) again.push_back({e.child, e.parent});
  CHECK(again == expect);
}
