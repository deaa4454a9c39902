#include "qdag/aggregate.hpp"

#include <algorithm>
#include <limits>

#include "qdag/error.hpp"

namespace qdag {

Adjacency representative_draw(const std::vector<Adjacency>& draws, std::size_t* index) {
  if (draws.empty()) throw InputError("empty draw archive");
  const int p = draws.front().p();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(p, p);
  for (const auto& a : draws) {
    if (a.p() != p) throw DimensionError("draws differ in node count");
    for (int h = 0; h < p; ++h) {
      for (int j = 0; j < p; ++j) mean(h, j) += a(h, j) ? 1.0 : 0.0;
    }
  }
  mean /= static_cast<double>(draws.size());
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < draws.size(); ++d) {
    double dist = 0.0;
    for (int h = 0; h < p; ++h) {
      for (int j = 0; j < p; ++j) {
        const double diff = (draws[d](h, j) ? 1.0 : 0.0) - mean(h, j);
        dist += diff * diff;
      }
    }
    if (dist < best_d) {
      best_d = dist;
      best = d;
    }
  }
  if (index) *index = best;
  return draws[best];
}

std::vector<Adjacency> representatives(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw InputError("empty draw archive");
  std::vector<std::vector<Adjacency>> per(static_cast<std::size_t>(draws.n));
  for (std::size_t d = 0; d < draws.draws.size(); ++d) {
    const IndividualDagSet set = draws.dag_set(d);
    for (int i = 0; i < draws.n; ++i) {
      per[static_cast<std::size_t>(i)].push_back(set.per_individual[static_cast<std::size_t>(i)]);
    }
  }
  std::vector<Adjacency> out;
  out.reserve(per.size());
  for (const auto& v : per) out.push_back(representative_draw(v));
  return out;
}

AggregatedDag aggregate_dags(const std::vector<Adjacency>& reps, double tau) {
  if (reps.empty()) throw InputError("no representatives to aggregate");
  const int p = reps.front().p();
  AggregatedDag agg;
  agg.tau = tau;
  agg.weights = Eigen::MatrixXd::Zero(p, p);
  for (const auto& a : reps) {
    if (a.p() != p) throw DimensionError("representatives differ in node count");
    for (int h = 0; h < p; ++h) {
      for (int j = 0; j < p; ++j) agg.weights(h, j) += a(h, j) ? 1.0 : 0.0;
    }
  }
  agg.weights /= static_cast<double>(reps.size());
  return agg;
}

std::vector<HubEntry> hub_rank(const std::vector<AggregatedDag>& aggregates, Degree degree,
                               int top_k, int min_quantiles) {
  if (aggregates.empty()) return {};
  const int p = static_cast<int>(aggregates.front().weights.rows());
  std::vector<HubEntry> entries(static_cast<std::size_t>(p));
  for (int h = 0; h < p; ++h) entries[static_cast<std::size_t>(h)].node = h;
  for (const auto& agg : aggregates) {
    if (agg.weights.rows() != p) throw DimensionError("aggregates differ in node count");
    const Eigen::VectorXd deg =
        degree == Degree::in ? Eigen::VectorXd(agg.weights.rowwise().sum())
                             : Eigen::VectorXd(agg.weights.colwise().sum().transpose());
    std::vector<int> order(static_cast<std::size_t>(p));
    for (int h = 0; h < p; ++h) order[static_cast<std::size_t>(h)] = h;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return deg[a] > deg[b]; });
    for (int r = 0; r < std::min(top_k, p); ++r) {
      entries[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])].appearances += 1;
    }
    for (int h = 0; h < p; ++h) entries[static_cast<std::size_t>(h)].degree_sum += deg[h];
  }
  std::vector<HubEntry> out;
  for (const auto& e : entries) {
    if (e.appearances >= min_quantiles) out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(), [](const HubEntry& a, const HubEntry& b) {
    if (a.appearances != b.appearances) return a.appearances > b.appearances;
    if (a.degree_sum != b.degree_sum) return a.degree_sum > b.degree_sum;
    return a.node < b.node;
  });
  return out;
}

std::vector<PrevalentEdge> edge_prevalence(const std::vector<std::vector<Adjacency>>& reps_per_tau,
                                           double patient_frac, int min_quantiles) {
  if (reps_per_tau.empty()) return {};
  const int p = reps_per_tau.front().empty() ? 0 : reps_per_tau.front().front().p();
  std::vector<PrevalentEdge> out;
  for (int h = 0; h < p; ++h) {
    for (int j = 0; j < p; ++j) {
      if (h == j) continue;
      PrevalentEdge e;
      e.child = h;
      e.parent = j;
      for (const auto& reps : reps_per_tau) {
        if (reps.empty()) throw InputError("no representatives at one quantile level");
        long count = 0;
        for (const auto& a : reps) count += a(h, j) ? 1 : 0;
        const double prev = static_cast<double>(count) / static_cast<double>(reps.size());
        e.prevalence.push_back(prev);
        if (prev >= patient_frac) ++e.quantiles;
      }
      if (e.quantiles >= min_quantiles) out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace qdag
