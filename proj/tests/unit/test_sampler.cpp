#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "qdag/error.hpp"
#include "qdag/graph.hpp"
#include "qdag/sampler.hpp"
#include "qdag/simdata.hpp"

using namespace qdag;

namespace {

template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

// IG(shape, rate) CDF: P(X <= x) = Q(shape, rate / x).
auto ig_cdf(double shape, double rate) {
  return [=](double x) { return boost::math::gamma_q(shape, rate / x); };
}

PxhsGroup group(double T2, double c, std::vector<double> etas, std::vector<double> L2s,
                std::vector<double> zetas) {
  PxhsGroup g;
  g.T2 = T2;
  g.c = c;
  for (std::size_t k = 0; k < etas.size(); ++k) {
    PxhsBlock b;
    b.eta = etas[k];
    b.L2 = L2s[k];
    b.zeta = zetas[k];
    b.xi = Eigen::VectorXd::Ones(1);
    b.m = Eigen::VectorXd::Ones(1);
    g.blocks.push_back(b);
  }
  return g;
}

constexpr int kDraws = 100000;

ModelDesign empty_design(int n) {
  ModelDesign d;
  d.covariates.resize(n, 0);
  return d;
}

}  // namespace

TEST_CASE("Gibbs draw for the global scale") {
  Rng rng(1);
  struct Point {
    PxhsGroup g;
    double shape, rate;
  };
  std::vector<Point> pts{
      {group(1.0, 1.0, {0.0}, {1.0}, {1.0}), 1.0, 1.0},  // q = 1, c = 1, eta = 0 -> IG(1, 1)
      {group(2.0, 0.5, {1.5, -0.3}, {0.7, 2.0}, {1, 1}), 1.5, 2.0 + 0.5 * (1.5 * 1.5 / 0.7 + 0.09 / 2.0)},
      {group(0.1, 3.0, {0.2, 0.1, 4.0}, {1.0, 0.5, 9.0}, {1, 1, 1}), 2.0,
       1.0 / 3.0 + 0.5 * (0.04 + 0.02 + 16.0 / 9.0)}};
  for (const auto& pt : pts) {
    std::vector<double> xs(kDraws);
    for (auto& x : xs) x = gibbs::draw_T2(pt.g, rng);
    CHECK(ks_statistic(xs, ig_cdf(pt.shape, pt.rate)) < 0.01);
  }
  // larger sum of squares raises the conditional mean rate / (shape - 1)
  double lo = 0, hi = 0;
  const PxhsGroup small = group(1.0, 1.0, {0.1, 0.1, 0.1}, {1, 1, 1}, {1, 1, 1});
  const PxhsGroup big = group(1.0, 1.0, {3.0, 3.0, 3.0}, {1, 1, 1}, {1, 1, 1});
  for (int i = 0; i < kDraws; ++i) {
    lo += gibbs::draw_T2(small, rng) / kDraws;
    hi += gibbs::draw_T2(big, rng) / kDraws;
  }
  CHECK(hi > lo);
  CHECK(lo == doctest::Approx((1.0 + 0.5 * 0.03) / 1.0).epsilon(0.05));
}

TEST_CASE("Gibbs draws for c, L2 and zeta") {
  Rng rng(2);
  for (double T2 : {0.3, 1.0, 1e12}) {
    const PxhsGroup g = group(T2, 1.0, {0.5}, {1.0}, {1.0});
    std::vector<double> xs(kDraws);
    for (auto& x : xs) x = gibbs::draw_c(g, rng);
    CHECK(ks_statistic(xs, ig_cdf(1.0, 1.0 + 1.0 / T2)) < 0.01);
  }
  struct L2Point {
    double T2, eta, zeta;
  };
  for (const auto& pt : {L2Point{1.0, 0.0, 2.0}, L2Point{0.5, 1.2, 1.0}, L2Point{4.0, -3.0, 0.2}}) {
    const PxhsGroup g = group(pt.T2, 1.0, {0.1, pt.eta}, {1.0, 1.0}, {1.0, pt.zeta});
    std::vector<double> xs(kDraws);
    for (auto& x : xs) x = gibbs::draw_L2(g, 1, rng);
    CHECK(ks_statistic(xs, ig_cdf(1.0, 1.0 / pt.zeta + pt.eta * pt.eta / (2.0 * pt.T2))) < 0.01);
  }
  for (double L2 : {0.1, 1.0, 25.0}) {
    PxhsBlock b;
    b.L2 = L2;
    std::vector<double> xs(kDraws);
    for (auto& x : xs) x = gibbs::draw_zeta(b, rng);
    CHECK(ks_statistic(xs, ig_cdf(1.0, 1.0 + 1.0 / L2)) < 0.01);
  }
}

TEST_CASE("sign indicator posterior") {
  CHECK(gibbs::m_plus_probability(0.0, 0.1) == 0.5);
  const double expect = 1.0 / (1.0 + std::exp(-2.0 / 0.01));
  CHECK(gibbs::m_plus_probability(1.0, 0.1) == doctest::Approx(expect));
  CHECK(gibbs::m_plus_probability(-1.0, 0.1) == doctest::Approx(1.0 - expect));
  CHECK(gibbs::m_plus_probability(0.3, 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.6))));
  CHECK(gibbs::m_plus_probability(0.3, 1.0) + gibbs::m_plus_probability(-0.3, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("threshold step ladder") {
  CHECK(adapt_threshold_step(0.05, 0) == -1);
  CHECK(adapt_threshold_step(0.3, 2) == 2);
  CHECK(adapt_threshold_step(0.9, 4) == 4);
  CHECK(adapt_threshold_step(0.0, -4) == -4);
}

TEST_CASE("configuration defaults and validation") {
  const SamplerConfig q = SamplerConfig::defaults(SamplerMode::qdagx);
  CHECK(q.iters == 5000);
  CHECK(q.burnin == 2500);
  CHECK(q.thin == 10);
  const SamplerConfig o = SamplerConfig::defaults(SamplerMode::oracle);
  CHECK(o.iters == 20000);
  CHECK(o.burnin == 10000);
  CHECK(o.thin == 10);
  CHECK_THROWS_AS(o.validate(3), ConfigError);  // no ordering
  SamplerConfig bad = q;
  bad.burnin = bad.iters;
  CHECK_THROWS_AS(bad.validate(3), ConfigError);
  CHECK(parse_mode("misspecified") == SamplerMode::misspecified);
  CHECK_THROWS_AS(parse_mode("nope"), ConfigError);
}

TEST_CASE("modelled edges per mode") {
  const auto qd = model_edges(4, SamplerMode::qdagx, identity_ordering(4));
  CHECK(qd.size() == 4 + 12);
  const auto orc = model_edges(4, SamplerMode::oracle, identity_ordering(4));
  CHECK(orc.size() == 4 + 6);
  for (const auto& e : orc)
    if (!e.is_intercept()) CHECK(e.parent > e.child);
  NodeOrdering ord{{2, 0, 3, 1}};
  const auto pos = ord.positions();
  for (const auto& e : model_edges(4, SamplerMode::misspecified, ord))
    if (!e.is_intercept()) CHECK(pos[e.parent] > pos[e.child]);
  // the last node in the ordering has no parents
  for (const auto& e : model_edges(4, SamplerMode::oracle, identity_ordering(4)))
    if (e.child == 3) CHECK(e.is_intercept());
}

TEST_CASE("random-walk moves and the acyclicity indicator") {
  SimSettings s;
  s.n = 30;
  s.p = 3;
  s.q = 1;
  s.seed = 4;
  const SimDataset ds = simulate(s);
  const ModelDesign design = make_design(ds.x, 8);
  SamplerConfig cfg = SamplerConfig::defaults(SamplerMode::qdagx);
  const auto edges = model_edges(3, SamplerMode::qdagx, identity_ordering(3));
  QdagChain chain(ds.y, design, QuantileLevel(0.5), cfg, edges, true, 11);
  CHECK(chain.union_graph().edge_count() == 0);

  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    CHECK(chain.rw_update(Family::mu, e, 0, 0.0));
    CHECK(chain.rw_update(Family::t, e, 0, 0.0));
  }

  const int e01 = [&] {
    for (int e = 0; e < static_cast<int>(edges.size()); ++e)
      if (edges[e].child == 0 && edges[e].parent == 1) return e;
    return -1;
  }();
  const int e10 = [&] {
    for (int e = 0; e < static_cast<int>(edges.size()); ++e)
      if (edges[e].child == 1 && edges[e].parent == 0) return e;
    return -1;
  }();
  REQUIRE(e01 >= 0);
  REQUIRE(e10 >= 0);
  EdgeParamBlock on = chain.params()[e01];
  on.mu = 0.4;
  on.threshold = 0.1;
  chain.set_params(e01, on);
  CHECK(chain.union_graph()(0, 1));
  EdgeParamBlock back = chain.params()[e10];
  back.mu = 0.4;
  back.threshold = 0.1;
  CHECK(chain.log_acceptance_ratio(e10, back) == -std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(chain.log_acceptance_ratio(e01, chain.params()[e01])));
  CHECK(chain.log_acceptance_ratio(e01, chain.params()[e01]) == 0.0);
}

TEST_CASE("cached likelihood stays coherent") {
  SimSettings s;
  s.n = 40;
  s.p = 4;
  s.q = 2;
  s.seed = 8;
  const SimDataset ds = simulate(s);
  const ModelDesign design = make_design(ds.x, 10);
  for (SamplerMode mode : {SamplerMode::qdagx, SamplerMode::oracle}) {
    SamplerConfig cfg = SamplerConfig::defaults(mode);
    const auto edges = model_edges(4, mode, identity_ordering(4));
    QdagChain chain(ds.y, design, QuantileLevel(0.3), cfg, edges, mode == SamplerMode::qdagx, 5);
    double worst = 0.0;
    for (int it = 0; it < 300; ++it) {
      chain.sweep();
      if (it % 50 == 49) chain.adapt_steps();
      worst = std::max(worst, std::abs(chain.loglik() - chain.recompute_loglik()));
      REQUIRE(is_acyclic(chain.union_graph()));
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("run_chain archive shape, acyclicity and determinism") {
  SimSettings s;
  s.n = 30;
  s.p = 4;
  s.q = 1;
  s.seed = 2;
  const SimDataset ds = simulate(s);
  SamplerConfig cfg = SamplerConfig::defaults(SamplerMode::qdagx);
  cfg.iters = 405;
  cfg.burnin = 200;
  cfg.thin = 10;
  cfg.seed = 3;
  const PosteriorDraws a = run_chain(ds.y, ds.x, QuantileLevel(0.5), cfg, 8);
  CHECK(a.draws.size() == (405 - 200) / 10);
  for (std::size_t k = 0; k < a.draws.size(); ++k) CHECK(is_acyclic(a.union_graph(k)));
  const PosteriorDraws b = run_chain(ds.y, ds.x, QuantileLevel(0.5), cfg, 8);
  REQUIRE(b.draws.size() == a.draws.size());
  for (std::size_t k = 0; k < a.draws.size(); ++k) {
    CHECK(a.draws[k].loglik == b.draws[k].loglik);
    for (std::size_t e = 0; e < a.edges.size(); ++e) {
      CHECK(a.draws[k].edges[e].mu == b.draws[k].edges[e].mu);
      CHECK(a.draws[k].edges[e].threshold == b.draws[k].edges[e].threshold);
    }
  }

  // node chains in factorized modes give the same archive whatever the worker count
  SamplerConfig oc = SamplerConfig::defaults(SamplerMode::oracle);
  oc.iters = 300;
  oc.burnin = 100;
  oc.ordering = identity_ordering(4);
  oc.workers = 1;
  const PosteriorDraws o1 = run_chain(ds.y, ds.x, QuantileLevel(0.5), oc, 8);
  oc.workers = 3;
  const PosteriorDraws o3 = run_chain(ds.y, ds.x, QuantileLevel(0.5), oc, 8);
  for (std::size_t k = 0; k < o1.draws.size(); ++k)
    for (std::size_t e = 0; e < o1.edges.size(); ++e) CHECK(o1.draws[k].edges[e].mu == o3.draws[k].edges[e].mu);
}

TEST_CASE("intercept-only chain finds the sample quantile") {
  std::mt19937_64 gen(12);
  std::gamma_distribution<double> g(2.0, 1.0);
  const int n = 200;
  Eigen::MatrixXd y(n, 1);
  for (int i = 0; i < n; ++i) y(i, 0) = 1.0 + g(gen);
  std::vector<double> sorted(y.data(), y.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted[149] - sorted[49];
  for (double tau : {0.25, 0.5, 0.75}) {
    SamplerConfig cfg = SamplerConfig::defaults(SamplerMode::oracle);
    cfg.iters = 4000;
    cfg.burnin = 2000;
    cfg.ordering = identity_ordering(1);
    const PosteriorDraws d = run_chain(y, Eigen::MatrixXd(n, 0), QuantileLevel(tau), cfg);
    REQUIRE(d.edges.size() == 1);
    double fitted = 0.0;
    for (std::size_t k = 0; k < d.draws.size(); ++k) fitted += d.beta(k, 0)[0] / d.draws.size();
    const double sample_q = sorted[static_cast<std::size_t>(std::ceil(n * tau)) - 1];
    CAPTURE(tau);
    CHECK(std::abs(fitted - sample_q) <= 0.05 * iqr);
  }
}

TEST_CASE("single-edge chain matches the grid posterior of mu") {
  // Y1 <- Y2 only, no covariates: beta = mu 1(|mu| > t). The marginal posterior
  // of mu integrates t out in closed form through the Gamma CDF.
  const int n = 5;
  Eigen::MatrixXd y(n, 2);
  y.col(1) << 1.0, -0.5, 2.0, 0.3, -1.2;
  y.col(0) << 0.9, -0.1, 1.4, 0.5, -1.0;
  const ModelDesign design = empty_design(n);
  SamplerConfig cfg = SamplerConfig::defaults(SamplerMode::oracle);
  const QuantileLevel tau(0.5);
  QdagChain chain(y, design, tau, cfg, {EdgeKey{0, 1}}, false, 21);

  const double lo = -1.5, hi = 2.5;
  const int bins = 100;
  std::vector<double> hist(bins, 0.0);
  const long iters = 1000000, burn = 10000;
  long outside = 0;
  for (long it = 0; it < iters + burn; ++it) {
    chain.sweep();
    if (it < burn) continue;
    const double mu = chain.params()[0].mu;
    const int b = static_cast<int>(std::floor((mu - lo) / (hi - lo) * bins));
    if (b < 0 || b >= bins) ++outside;
    else hist[b] += 1.0;
  }
  auto loglik = [&](double beta) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = y(i, 0) - beta * y(i, 1);
      s += r >= 0 ? -0.5 * r : 0.5 * r;
    }
    return s;
  };
  const double l0 = loglik(0.0);
  std::vector<double> grid(bins, 0.0);
  double total = 0.0;
  const int sub = 50;
  for (int b = 0; b < bins; ++b) {
    for (int s = 0; s < sub; ++s) {
      const double mu = lo + (b + (s + 0.5) / sub) * (hi - lo) / bins;
      const double below = boost::math::gamma_p(10.0, 10.0 * std::abs(mu));  // P(t < |mu|)
      const double prior = std::exp(-0.5 * mu * mu / 0.25);
      grid[b] += prior * ((1.0 - below) * std::exp(l0) + below * std::exp(loglik(mu)));
    }
    total += grid[b];
  }
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += std::abs(hist[b] / iters - grid[b] / total);
  tv = 0.5 * tv + 0.5 * outside / double(iters);
  CHECK(tv < 0.05);
}

TEST_CASE("Geweke report lists its test functions") {
  GewekeConfig g;
  g.rounds = 2000;
  const GewekeReport r = geweke_joint_test(g);
  CHECK(r.names.size() >= 20);
  CHECK(r.z.size() == r.names.size());
  CHECK(r.rounds == 2000);
  CHECK(r.to_string().find(r.names.front()) != std::string::npos);
}
