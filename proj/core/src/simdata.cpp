#include "qdag/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qdag/error.hpp"
#include "qdag/prior.hpp"

namespace qdag {

namespace {

// Smallest |X| allowed inside log|X|.
constexpr double kLogAbsFloor = 1e-12;

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

}  // namespace

double true_theta(const ThetaForm& form, const Eigen::Ref<const Eigen::RowVectorXd>& x_row,
                  double tau) {
  if (form.q_star < 0 || form.q_star > 3) throw InputError("q_star must lie in {0,1,2,3}");
  if (static_cast<int>(form.chosen.size()) != form.q_star) {
    throw InputError("number of chosen covariates must equal q_star");
  }
  for (int k : form.chosen) {
    if (k < 0 || k >= x_row.size()) throw DimensionError("chosen covariate out of range");
  }
  const double t2 = tau * tau;
  if (form.q_star == 0) return 1.0 + t2;
  const double x1 = x_row[form.chosen[0]];
  double v = x1 * x1 + std::log1p(t2);
  if (form.q_star >= 2) v += std::exp(x_row[form.chosen[1]]);
  if (form.q_star >= 3) v += std::log(std::max(std::abs(x_row[form.chosen[2]]), kLogAbsFloor));
  return v;
}

std::vector<std::vector<int>> gen_dag(int p, std::uint64_t seed) {
  if (p < 2) throw DimensionError("need at least two nodes");
  Rng rng(seed);
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(p));
  for (int h = 0; h + 1 < p; ++h) {
    const int later = p - 1 - h;
    const int count = std::max(1, later / 5);
    std::vector<int> pool(static_cast<std::size_t>(later));
    std::iota(pool.begin(), pool.end(), h + 1);
    // Partial Fisher-Yates: the first `count` entries form a uniform subset.
    for (int i = 0; i < count; ++i) {
      const int r = rng.uniform_int(i, later - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(r)]);
    }
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    parents[static_cast<std::size_t>(h)] = std::move(pool);
  }
  return parents;
}

Adjacency parents_to_adjacency(const std::vector<std::vector<int>>& parents) {
  const int p = static_cast<int>(parents.size());
  Adjacency adj(p);
  for (int h = 0; h < p; ++h) {
    for (int j : parents[static_cast<std::size_t>(h)]) adj.set(h, j);
  }
  return adj;
}

Eigen::MatrixXd gen_covariates(int n, int q, std::uint64_t seed) {
  if (n < 1 || q < 1) throw DimensionError("covariate matrix needs n, q >= 1");
  Rng rng(seed);
  Eigen::MatrixXd x(n, q);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < q; ++k) x(i, k) = rng.normal();
  }
  return x;
}

double default_sim_threshold(int q) { return q <= 2 ? 0.5 : 1.0; }

int SimTruth::grid_index(double tau) const {
  for (std::size_t g = 0; g < tau_grid.size(); ++g) {
    if (std::abs(tau_grid[g] - tau) < 1e-9) return static_cast<int>(g);
  }
  return -1;
}

ThetaForm random_form(int q, Rng& rng) {
  ThetaForm f;
  f.q_star = rng.uniform_int(0, std::min(q, 3));
  std::vector<int> pool(static_cast<std::size_t>(q));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < f.q_star; ++i) {
    const int r = rng.uniform_int(i, q - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(r)]);
    f.chosen.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return f;
}

SimDataset gen_responses(const std::vector<std::vector<int>>& parents, const Eigen::MatrixXd& x,
                         const std::vector<ThetaForm>& intercept_forms,
                         const std::vector<ThetaForm>& edge_forms, double threshold,
                         std::uint64_t seed) {
  const int p = static_cast<int>(parents.size());
  const int n = static_cast<int>(x.rows());
  if (static_cast<int>(intercept_forms.size()) != p ||
      edge_forms.size() != static_cast<std::size_t>(p) * p) {
    throw DimensionError("form tables do not match the number of nodes");
  }
  if (!(threshold > 0)) throw InputError("threshold must be positive");
  for (int h = 0; h < p; ++h) {
    for (int j : parents[static_cast<std::size_t>(h)]) {
      if (j <= h || j >= p) throw InputError("parents must come later in the node order");
    }
  }
  SimDataset ds;
  ds.x = x;
  ds.y = Eigen::MatrixXd::Zero(n, p);
  SimTruth& t = ds.truth;
  t.n = n;
  t.p = p;
  t.q = static_cast<int>(x.cols());
  t.threshold = threshold;
  t.parents = parents;
  t.intercept_forms = intercept_forms;
  t.edge_forms = edge_forms;
  t.tau_grid = default_grid();
  t.tau_draws = Eigen::MatrixXd::Zero(n, p);

  Rng rng(seed);
  for (int h = p - 1; h >= 0; --h) {
    for (int i = 0; i < n; ++i) {
      const double tau = rng.uniform();
      t.tau_draws(i, h) = tau;
      const auto row = x.row(i);
      double v = threshold_value(true_theta(intercept_forms[static_cast<std::size_t>(h)], row, tau),
                                 threshold);
      for (int j : parents[static_cast<std::size_t>(h)]) {
        v += ds.y(i, j) * threshold_value(true_theta(t.edge_form(h, j), row, tau), threshold);
      }
      ds.y(i, h) = v;
    }
  }
  truth_on_grid(t, x, ds.y);
  return ds;
}

void truth_on_grid(SimTruth& t, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const int n = t.n, p = t.p;
  t.theta.clear();
  t.beta.clear();
  t.theta0.clear();
  t.beta0.clear();
  t.quantile.clear();
  for (double tau : t.tau_grid) {
    Array3 th(n, p, p), be(n, p, p);
    Eigen::MatrixXd th0(n, p), be0(n, p), qu(n, p);
    for (int i = 0; i < n; ++i) {
      const auto row = x.row(i);
      for (int h = 0; h < p; ++h) {
        th0(i, h) = true_theta(t.intercept_forms[static_cast<std::size_t>(h)], row, tau);
        be0(i, h) = threshold_value(th0(i, h), t.threshold);
        double qv = be0(i, h);
        for (int j : t.parents[static_cast<std::size_t>(h)]) {
          th(i, h, j) = true_theta(t.edge_form(h, j), row, tau);
          be(i, h, j) = threshold_value(th(i, h, j), t.threshold);
          qv += y(i, j) * be(i, h, j);
        }
        qu(i, h) = qv;
      }
    }
    t.theta.push_back(std::move(th));
    t.beta.push_back(std::move(be));
    t.theta0.push_back(std::move(th0));
    t.beta0.push_back(std::move(be0));
    t.quantile.push_back(std::move(qu));
  }
}

SimDataset simulate(const SimSettings& s) {
  if (s.n < 2 || s.p < 2 || s.q < 1) throw DimensionError("simulation needs n >= 2, p >= 2, q >= 1");
  const double thr = s.threshold > 0 ? s.threshold : default_sim_threshold(s.q);
  const auto parents = gen_dag(s.p, derive_seed(s.seed, 1));
  const Eigen::MatrixXd x = gen_covariates(s.n, s.q, derive_seed(s.seed, 2));
  Rng form_rng(derive_seed(s.seed, 3));
  std::vector<ThetaForm> intercepts;
  std::vector<ThetaForm> edges(static_cast<std::size_t>(s.p) * s.p);
  for (int h = 0; h < s.p; ++h) {
    intercepts.push_back(random_form(s.q, form_rng));
    for (int j : parents[static_cast<std::size_t>(h)]) {
      edges[static_cast<std::size_t>(h) * s.p + j] = random_form(s.q, form_rng);
    }
  }
  return gen_responses(parents, x, intercepts, edges, thr, derive_seed(s.seed, 4));
}

std::uint64_t replicate_seed(std::uint64_t base, int replicate) {
  return derive_seed(base, 100, static_cast<std::uint64_t>(replicate));
}

}  // namespace qdag
