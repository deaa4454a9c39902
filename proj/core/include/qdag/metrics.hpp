#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "qdag/sampler.hpp"
#include "qdag/simdata.hpp"
#include "qdag/tensor.hpp"

namespace qdag {

struct Rates {
  double tpr = 0.0;
  double fpr = 0.0;
  bool tpr_defined = false;  // false when truth has no positives
  bool fpr_defined = false;  // false when truth has no negatives
};

Rates selection_rates(const std::vector<bool>& selected, const std::vector<bool>& truth);

/// Area under the ROC curve, equal to the Mann-Whitney statistic with ties
/// counted as one half. Throws DegenerateError without both classes.
double auc(std::span<const double> scores, const std::vector<bool>& truth);

/// Node-averaged rates: for each node h the pool is every (i, j != h) entry of
/// an n x p x p array; rates are averaged over nodes where they are defined.
struct NodeAverages {
  double tpr = 0.0, fpr = 0.0, auc = 0.0;
  int tpr_nodes = 0, fpr_nodes = 0, auc_nodes = 0;
};
NodeAverages node_averages_y(const Array3& scores, const Array3& selected, const Array3& truth);
/// Same for p x p x q covariate arrays, pooling every (j != h, k) for node h.
NodeAverages node_averages_x(const Array3& scores, const Array3& selected, const Array3& truth);

/// sqrt((1/n) sum_h ||est_h - true_h||_F^2) over n x p x p arrays, times
/// 1/sqrt(2) when the ordering was unknown (twice as many functions fitted).
double estimation_norm(const Array3& est, const Array3& truth, bool unknown_ordering);

struct EstimationNorms {
  double beta = 0.0;
  double theta = 0.0;
};
EstimationNorms estimation_norms(const Array3& beta_est, const Array3& beta_true,
                                 const Array3& theta_est, const Array3& theta_true,
                                 SamplerMode mode);

/// (1/n) sum_h ||q_true_h - q_est_h||^2 / (max{1, floor((p-h)/5)} + 1), with h 1-based.
double adjusted_mse(const Eigen::MatrixXd& q_true, const Eigen::MatrixXd& q_est);

/// Coefficient functions evaluated at posterior-mean parameters.
struct PointEstimates {
  Array3 theta;            // n x p x p
  Array3 beta;             // n x p x p
  Eigen::MatrixXd theta0;  // n x p intercepts
  Eigen::MatrixXd beta0;
  Eigen::MatrixXd quantile;  // n x p fitted conditional quantiles
};
PointEstimates posterior_mean_estimates(const PosteriorDraws& draws, const Eigen::MatrixXd& y);

struct MetricReport {
  double tau = 0.5;
  std::string mode;
  double tpr_y = 0, fpr_y = 0, auc_y = 0;
  double tpr_x = 0, fpr_x = 0, auc_x = 0;
  double norm_beta = 0, norm_theta = 0, mse = 0;
  std::vector<double> node_thresholds;  // edge selection threshold per node

  static std::vector<std::string> names();
  std::vector<double> values() const;
};

/// Covariate truth (h, j, k): edge h <- j is in the true DAG and its surface uses X_k.
Array3 covariate_truth(const SimTruth& truth);
/// Edge truth (i, h, j) at grid index g: beta_true != 0.
Array3 edge_truth(const SimTruth& truth, int g);

/// All nine metrics for one fitted archive against simulation truth. Edge and
/// covariate calls use per-node FDR control at `fdr_target`.
MetricReport evaluate(const PosteriorDraws& draws, const SimTruth& truth, const Eigen::MatrixXd& y,
                      double fdr_target = 0.10);
/// Scores the simulation truth against itself (probabilities 0/1, exact estimates).
MetricReport evaluate_truth(const SimTruth& truth, double tau, double fdr_target = 0.10);

}  // namespace qdag
