#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdag/graph.hpp"
#include "qdag/prior.hpp"
#include "qdag/quantile_loss.hpp"
#include "qdag/rng.hpp"

namespace qdag {

/// oracle: known ordering, node chains run independently.
/// qdagx: unknown ordering, one joint chain under the union-DAG constraint.
/// misspecified: like oracle but with a supplied (wrong) ordering.
enum class SamplerMode { oracle, qdagx, misspecified };

std::string to_string(SamplerMode mode);
SamplerMode parse_mode(const std::string& text);

/// Fault injection for the Geweke harness: scales one inverse-gamma rate.
enum class Mutation { none, t2_rate, c_rate, l2_rate, zeta_rate };
std::string to_string(Mutation m);

enum class Family { eta = 0, xi = 1, mu = 2, t = 3 };
inline constexpr int kFamilyCount = 4;
std::string to_string(Family f);

struct SamplerConfig {
  int iters = 5000;
  int burnin = 2500;
  int thin = 10;
  double step_eta = 0.1;
  double step_xi = 0.1;
  double step_mu = 0.5;
  double step_t_base = 0.1;
  int step_t_z_min = -4;
  int step_t_z_max = 4;
  int adapt_window = 100;
  // Ladder adaptation of the eta, xi and mu steps during burn-in, with the
  // same rule as the threshold step and exponents in [step_z_min, step_z_max].
  bool adapt_all_steps = true;
  // Likelihood tempering during the first `anneal_fraction` of burn-in: the
  // log-likelihood weight rises geometrically from anneal_start to 1.
  double anneal_fraction = 0.5;
  double anneal_start = 1e-3;
  int step_z_min = -10;
  int step_z_max = 4;
  std::uint64_t seed = 1;
  SamplerMode mode = SamplerMode::qdagx;
  std::optional<NodeOrdering> ordering;
  PriorHyper hyper;
  bool threshold_intercept = true;
  Mutation mutation = Mutation::none;
  double mutation_factor = 2.0;
  int workers = 1;  // node chains run in parallel in factorized modes

  /// Mode-specific schedule defaults (2e4/1e4/10 factorized, 5000/2500/10 joint).
  static SamplerConfig defaults(SamplerMode mode);
  void validate(int p) const;
};

/// Identifies one coefficient function: parent < 0 denotes the node intercept.
struct EdgeKey {
  int child = 0;
  int parent = -1;
  bool is_intercept() const { return parent < 0; }
  bool operator==(const EdgeKey&) const = default;
};

struct QuantileDagDraw {
  long iteration = 0;
  double loglik = 0.0;
  std::vector<EdgeParamBlock> edges;  // aligned with PosteriorDraws::edges
};

struct AcceptanceRates {
  std::array<long, kFamilyCount> proposed{};
  std::array<long, kFamilyCount> accepted{};
  double rate(Family f) const;
  void merge(const AcceptanceRates& other);
};

/// Thinned post-burn-in archive of one chain (or merged node chains).
struct PosteriorDraws {
  double tau = 0.5;
  SamplerMode mode = SamplerMode::qdagx;
  SamplerConfig config;
  int n = 0;
  int p = 0;
  std::vector<EdgeKey> edges;
  ModelDesign design;
  NodeOrdering ordering;  // identity in qdagx mode
  std::vector<QuantileDagDraw> draws;
  AcceptanceRates acceptance;
  bool threshold_intercept = true;

  int q() const { return design.q(); }
  /// Index of edge (child, parent) or -1 when it is not modelled.
  int edge_index(int child, int parent) const;
  Eigen::VectorXd theta(std::size_t draw, std::size_t edge) const;
  Eigen::VectorXd beta(std::size_t draw, std::size_t edge) const;
  /// Per-individual graphs and union implied by one draw.
  IndividualDagSet dag_set(std::size_t draw) const;
  Adjacency union_graph(std::size_t draw) const;
};

/// Edge list modelled in a mode: intercepts for every node, then each
/// allowed (child, parent) pair.
std::vector<EdgeKey> model_edges(int p, SamplerMode mode, const NodeOrdering& ordering);

/// Inverse-gamma full conditionals of the expanded half-Cauchy scales.
namespace gibbs {
double draw_T2(const PxhsGroup& g, Rng& rng, double rate_scale = 1.0);
double draw_c(const PxhsGroup& g, Rng& rng, double rate_scale = 1.0);
double draw_L2(const PxhsGroup& g, int k, Rng& rng, double rate_scale = 1.0);
double draw_zeta(const PxhsBlock& blk, Rng& rng, double rate_scale = 1.0);
/// P(m = +1 | xi) under xi ~ N(m, sigma_m^2), m = +-1 equally likely a priori.
double m_plus_probability(double xi, double sigma_m);
double draw_m(double xi, double sigma_m, Rng& rng);
}  // namespace gibbs

/// Threshold step ladder: z moves down below 20% window acceptance, up above
/// 40%, clamped to [z_min, z_max]. The step is base * 2^z.
int adapt_threshold_step(double acceptance_window_rate, int current_z, int z_min = -4,
                         int z_max = 4);

/// One MCMC chain over a set of edges. Caches theta, beta, fitted quantiles
/// and node log-likelihoods; every cache equals a from-scratch recomputation
/// from the current parameters.
class QdagChain {
 public:
  QdagChain(const Eigen::MatrixXd& y, const ModelDesign& design, QuantileLevel tau,
            const SamplerConfig& cfg, std::vector<EdgeKey> edges, bool enforce_dag,
            std::uint64_t seed);

  /// One full sweep of updates (a)-(i) over every edge in list order.
  void sweep();
  /// Applies the step adaptation rule to every edge and resets the windows.
  void adapt_steps();
  /// Random-walk Metropolis update of one family for edge e; `block` indexes
  /// pxHS blocks (nonlinear first, then linear) for eta and xi. Returns accepted.
  bool rw_update(Family family, int e, int block = 0, std::optional<double> step = {});
  /// Log acceptance ratio (likelihood plus prior) of replacing edge e's
  /// parameters; minus infinity if the union graph would become cyclic.
  double log_acceptance_ratio(int e, const EdgeParamBlock& proposal) const;
  /// Unconditionally installs parameters for edge e (no acyclicity check).
  void set_params(int e, const EdgeParamBlock& params);
  /// Weight on the log-likelihood in acceptance ratios (1 = exact posterior).
  void set_likelihood_weight(double w) { lik_weight_ = w; }
  double likelihood_weight() const { return lik_weight_; }
  /// Replaces the response matrix and rebuilds the caches.
  void set_data(const Eigen::MatrixXd& y);
  /// Samples every parameter from the prior, restricted to acyclic unions.
  void draw_from_prior(int max_tries = 100000);

  const std::vector<EdgeKey>& edges() const { return edges_; }
  const std::vector<EdgeParamBlock>& params() const { return params_; }
  const Eigen::VectorXd& beta(int e) const { return beta_[e]; }
  double loglik() const;
  double node_loglik_cached(int node) const { return node_ll_[node]; }
  double log_prior() const;
  Adjacency union_graph() const;
  /// Recomputes log-likelihood from the parameters alone.
  double recompute_loglik() const;
  const AcceptanceRates& acceptance() const { return acc_; }
  int step_exponent(Family f, int e) const { return z_[static_cast<std::size_t>(f)][e]; }
  double step_size(Family f, int e) const;
  Rng& rng() { return rng_; }
  const Eigen::MatrixXd& data() const { return y_; }

 private:
  Eigen::VectorXd parent_column(int e) const;
  void theta_of(const EdgeParamBlock& params, Eigen::VectorXd& out) const;
  void beta_of(int e, const Eigen::VectorXd& theta, double threshold, Eigen::VectorXd& out) const;
  void rebuild_caches();
  void refresh_node(int node);
  bool metropolis(int e, const EdgeParamBlock& proposal, double log_prior_ratio);
  void gibbs_scales(EdgeParamBlock& p);

  Eigen::MatrixXd y_;
  const ModelDesign& design_;
  QuantileLevel tau_;
  SamplerConfig cfg_;
  std::vector<EdgeKey> edges_;
  bool enforce_dag_;
  Rng rng_;
  int p_;
  double lik_weight_ = 1.0;

  std::vector<EdgeParamBlock> params_;
  std::vector<Eigen::VectorXd> theta_;
  std::vector<Eigen::VectorXd> beta_;
  std::vector<int> nonzero_;
  std::vector<std::vector<int>> node_edges_;
  std::vector<Eigen::VectorXd> fitted_;
  std::vector<double> node_ll_;
  std::vector<int> union_count_;  // p x p, number of edge records turning (h,j) on
  Adjacency union_;

  // Per family and edge: ladder exponent and the current window's counts.
  std::array<std::vector<int>, kFamilyCount> z_;
  std::array<std::vector<int>, kFamilyCount> window_acc_;
  std::array<std::vector<int>, kFamilyCount> window_tries_;
  AcceptanceRates acc_;

  mutable Eigen::VectorXd scratch_theta_;
  mutable Eigen::VectorXd scratch_beta_;
};

/// Runs the sampler on responses y (n x p) and covariates x (n x q, q may be 0).
PosteriorDraws run_chain(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, QuantileLevel tau,
                         const SamplerConfig& cfg, int num_basis = kDefaultNumBasis);
PosteriorDraws run_chain(const Eigen::MatrixXd& y, const ModelDesign& design, QuantileLevel tau,
                         const SamplerConfig& cfg);

/// Draws responses from the working model given one parameter state; the
/// union graph must be acyclic. Noise is asymmetric Laplace at level tau.
Eigen::MatrixXd sample_responses(const ModelDesign& design, const std::vector<EdgeKey>& edges,
                                 const std::vector<EdgeParamBlock>& params, int p, double tau,
                                 bool threshold_intercept, Rng& rng);

/// Geweke joint-distribution test comparing marginal-conditional and
/// successive-conditional simulators on a tiny problem.
struct GewekeConfig {
  int p = 2;
  int q = 1;
  int n = 20;
  long rounds = 50000;
  int sweeps_per_round = 1;
  // The successive-conditional chain restarts from an exact joint draw every
  // `segment_rounds` rounds; segments are independent, so their means give an
  // exact variance estimate and a correct kernel stays unbiased at every step.
  int segment_rounds = 100;
  double tau = 0.5;
  std::uint64_t seed = 7;
  SamplerMode mode = SamplerMode::qdagx;
  Mutation mutation = Mutation::none;
  double mutation_factor = 2.0;
  int num_basis = 8;
  SamplerConfig sampler;  // step sizes and hyperparameters
};

struct GewekeReport {
  std::vector<std::string> names;
  std::vector<double> mean_marginal;
  std::vector<double> mean_successive;
  std::vector<double> z;
  long rounds = 0;
  double max_abs_z() const;
  std::string to_string() const;
};

GewekeReport geweke_joint_test(const GewekeConfig& cfg);

}  // namespace qdag
