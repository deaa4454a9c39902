#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qdag/graph.hpp"
#include "qdag/rng.hpp"
#include "qdag/tensor.hpp"

namespace qdag {

/// Functional form of one true coefficient surface: q_star in {0..3} and the
/// covariates (k1, k2, k3) it uses, in role order.
struct ThetaForm {
  int q_star = 0;
  std::vector<int> chosen;
};

/// theta for q_star = 0..3:
///   1 + tau^2
///   X_k1^2 + log(1 + tau^2)
///   X_k1^2 + log(1 + tau^2) + exp(X_k2)
///   X_k1^2 + log(1 + tau^2) + exp(X_k2) + log|X_k3|
double true_theta(const ThetaForm& form, const Eigen::Ref<const Eigen::RowVectorXd>& x_row,
                  double tau);

/// Parents per node (0-based); node h draws max{1, floor((p-1-h)/5)} parents
/// uniformly from the later nodes h+1..p-1, the last node has none.
std::vector<std::vector<int>> gen_dag(int p, std::uint64_t seed);
Adjacency parents_to_adjacency(const std::vector<std::vector<int>>& parents);

Eigen::MatrixXd gen_covariates(int n, int q, std::uint64_t seed);

/// Threshold used for all true coefficients: 0.5 for q <= 2, 1 otherwise.
double default_sim_threshold(int q);

struct SimTruth {
  int n = 0, p = 0, q = 0;
  double threshold = 0.5;
  std::vector<std::vector<int>> parents;
  std::vector<double> tau_grid;           // 0.1, ..., 0.9
  std::vector<ThetaForm> intercept_forms;  // per node
  std::vector<ThetaForm> edge_forms;       // p x p row-major; meaningful where (h, j) is an edge
  std::vector<Array3> theta;               // per grid tau: n x p x p (h <- j)
  std::vector<Array3> beta;
  std::vector<Eigen::MatrixXd> theta0;     // per grid tau: n x p intercepts
  std::vector<Eigen::MatrixXd> beta0;
  std::vector<Eigen::MatrixXd> quantile;   // per grid tau: n x p true conditional quantiles
  Eigen::MatrixXd tau_draws;               // n x p latent levels used to generate Y

  const ThetaForm& edge_form(int h, int j) const {
    return edge_forms[static_cast<std::size_t>(h) * p + j];
  }
  Adjacency dag() const { return parents_to_adjacency(parents); }
  int grid_index(double tau) const;  // -1 if not on the grid
};

struct SimDataset {
  Eigen::MatrixXd y;  // n x p
  Eigen::MatrixXd x;  // n x q
  SimTruth truth;
};

struct SimSettings {
  int n = 100;
  int p = 10;
  int q = 2;
  std::uint64_t seed = 1;
  double threshold = -1.0;  // negative: default_sim_threshold(q)
};

/// Random forms: q* uniform over {0..min(q,3)} and distinct covariates.
ThetaForm random_form(int q, Rng& rng);

/// Full generator: DAG, covariates, forms, responses by inverse quantile
/// sampling from the last node down, and truth on the tau grid.
SimDataset simulate(const SimSettings& s);

/// Responses for given structure and forms (exposed for tests).
SimDataset gen_responses(const std::vector<std::vector<int>>& parents, const Eigen::MatrixXd& x,
                         const std::vector<ThetaForm>& intercept_forms,
                         const std::vector<ThetaForm>& edge_forms, double threshold,
                         std::uint64_t seed);

/// Fills theta/beta/quantile truth at every grid tau from the generated data.
void truth_on_grid(SimTruth& truth, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Replicate r of a batch shares nothing with the others but the base seed.
std::uint64_t replicate_seed(std::uint64_t base, int replicate);

}  // namespace qdag
