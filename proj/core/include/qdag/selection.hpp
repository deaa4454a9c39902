#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdag/sampler.hpp"
#include "qdag/tensor.hpp"

namespace qdag {

/// Pseudo-probability of inclusion from horseshoe scales: 1 - 1/(1 + T^2 L^2).
double inclusion_probability(double T, double L);

/// probs(i, h, j): fraction of draws with beta_hj(X_i) != 0. Diagonal is 0.
struct EdgePosterior {
  int n = 0;
  int p = 0;
  Array3 probs;
};

/// probs(h, j, k): max of the averaged linear and nonlinear inclusion rates of
/// covariate k on edge h <- j.
struct CovariatePosterior {
  int p = 0;
  int q = 0;
  Array3 linear;
  Array3 nonlinear;
  Array3 probs;
};

EdgePosterior edge_posterior_probs(const PosteriorDraws& draws);
CovariatePosterior covariate_posterior_probs(const PosteriorDraws& draws);

enum class FdrRule { truth, bayesian };
std::string to_string(FdrRule rule);

struct FdrResult {
  double threshold = 0.0;
  std::vector<bool> selected;
  double achieved_fdr = 0.0;  // against truth, or the Bayesian FDR estimate
  FdrRule rule = FdrRule::bayesian;
};

/// Thresholds 0.01, 0.02, ..., 0.99.
std::vector<double> fdr_grid();

/// False discovery proportion of {probs > threshold} against truth.
double truth_fdr(std::span<const double> probs, const std::vector<bool>& truth, double threshold);
/// Sum over {probs >= threshold} of (1 - p), divided by max(1, #selected).
double bayesian_fdr(std::span<const double> probs, double threshold);

/// With truth: grid threshold whose FDR is closest to target (ties go to the
/// smaller threshold), selecting probs > threshold. Without truth: smallest
/// grid threshold whose Bayesian FDR is at most target, selecting probs >= it.
FdrResult fdr_select(std::span<const double> probs, const std::vector<bool>* truth,
                     double target = 0.10);

/// Per-node selection: the pool for node h is every (i, j != h) entry.
struct EdgeSelection {
  Array3 selected;                 // 0/1, n x p x p
  std::vector<double> thresholds;  // per node
  std::vector<double> achieved_fdr;
  FdrRule rule = FdrRule::bayesian;
};
EdgeSelection select_edges(const EdgePosterior& post, const Array3* truth, double target = 0.10);

/// Per-node selection of covariate effects: the pool for node h is every (j != h, k).
struct CovariateSelection {
  Array3 selected;  // 0/1, p x p x q
  std::vector<double> thresholds;
  std::vector<double> achieved_fdr;
  FdrRule rule = FdrRule::bayesian;
};
CovariateSelection select_covariates(const CovariatePosterior& post, const Array3* truth,
                                     double target = 0.10);

}  // namespace qdag
