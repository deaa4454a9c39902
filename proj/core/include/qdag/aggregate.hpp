#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qdag/graph.hpp"
#include "qdag/sampler.hpp"

namespace qdag {

/// Population-level network at one quantile: elementwise mean of
/// per-individual representative adjacencies.
struct AggregatedDag {
  double tau = 0.5;
  Eigen::MatrixXd weights;  // p x p, entry (h, j) for h <- j
};

/// Draw whose binary adjacency for individual i is closest in Frobenius
/// distance to that individual's posterior edge-probability matrix; ties go
/// to the earliest draw. Returns the adjacency and, optionally, its index.
Adjacency representative_draw(const std::vector<Adjacency>& individual_draws,
                              std::size_t* index = nullptr);

/// Representatives for every individual of an archive.
std::vector<Adjacency> representatives(const PosteriorDraws& draws);

AggregatedDag aggregate_dags(const std::vector<Adjacency>& reps, double tau = 0.5);

enum class Degree { in, out };

struct HubEntry {
  int node = 0;
  int appearances = 0;
  double degree_sum = 0.0;
};

/// Nodes ranked in the top_k by weighted degree in at least min_quantiles
/// aggregates; sorted by appearances, then degree sum (both descending), then index.
/// In-degree of h is its row sum (number of parents), out-degree its column sum.
std::vector<HubEntry> hub_rank(const std::vector<AggregatedDag>& aggregates, Degree degree,
                               int top_k = 3, int min_quantiles = 4);

struct PrevalentEdge {
  int child = 0;
  int parent = 0;
  int quantiles = 0;                // tau values meeting the patient fraction
  std::vector<double> prevalence;   // per tau
};

/// Edges present in at least patient_frac of individuals at >= min_quantiles
/// tau values. reps_per_tau[t][i] is individual i's representative at tau t.
std::vector<PrevalentEdge> edge_prevalence(const std::vector<std::vector<Adjacency>>& reps_per_tau,
                                           double patient_frac = 0.5, int min_quantiles = 5);

}  // namespace qdag
