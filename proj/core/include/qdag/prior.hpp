#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "qdag/rng.hpp"
#include "qdag/splines.hpp"

namespace qdag {

/// One parameter-expanded horseshoe block: alpha = eta * xi, with
/// eta ~ N(0, T^2 L^2), xi_l ~ N(m_l, sigma_m^2), m_l = +-1 with equal odds.
/// L^2 and zeta are the local scale and its inverse-gamma auxiliary.
struct PxhsBlock {
  double eta = 0.0;
  Eigen::VectorXd xi;
  Eigen::VectorXd m;  // entries are exactly +1 or -1
  double L2 = 1.0;
  double zeta = 1.0;

  int dim() const { return static_cast<int>(xi.size()); }
  Eigen::VectorXd alpha() const { return eta * xi; }
};

/// Blocks sharing one global scale T^2 (and its auxiliary c).
struct PxhsGroup {
  double T2 = 1.0;
  double c = 1.0;
  std::vector<PxhsBlock> blocks;
};

/// All parameters of one thresholded coefficient function beta_hj(X).
/// `nonlinear` holds one block per covariate with the reduced spline
/// dimension; `linear` holds one scalar block per covariate.
struct EdgeParamBlock {
  double mu = 0.0;
  PxhsGroup nonlinear;
  PxhsGroup linear;
  double threshold = 1.0;
};

struct PriorHyper {
  double sigma_m = 0.1;              // sd of xi around +-1
  double sigma_mu = 0.5;             // prior sd of mu for edges
  double sigma_mu_intercept = 10.0;  // prior sd of mu for node intercepts
  double a = 10.0;                   // Gamma shape of thresholds
  double b = 10.0;                   // Gamma rate of thresholds

  void validate() const;
};

/// Covariates entering the coefficient functions: raw columns for the linear
/// part plus one reduced spline basis per column.
struct ModelDesign {
  Eigen::MatrixXd covariates;  // n x q
  std::vector<SplineBasis> bases;

  int n() const { return static_cast<int>(covariates.rows()); }
  int q() const { return static_cast<int>(covariates.cols()); }
  std::vector<int> reduced_dims() const;
};

/// Builds reduced spline bases for every covariate column.
ModelDesign make_design(const Eigen::MatrixXd& covariates, int num_basis = kDefaultNumBasis,
                        double var_threshold = kDefaultVarThreshold);

/// Zero-initialized parameter shape matching the given reduced dimensions.
EdgeParamBlock make_edge_block(const std::vector<int>& reduced_dims);

/// theta_i = mu + sum_k Z_k (eta_k xi_k) + sum_k X_ik eta0_k xi0_k.
Eigen::VectorXd compute_theta(const ModelDesign& design, const EdgeParamBlock& params);

/// Hard threshold: theta_i if |theta_i| > threshold, exactly 0 otherwise.
Eigen::VectorXd compute_beta(const Eigen::VectorXd& theta, double threshold);
inline double threshold_value(double theta, double threshold) {
  return (theta > threshold || theta < -threshold) ? theta : 0.0;
}

/// One joint prior draw; half-Cauchy scales via the inverse-gamma expansion.
EdgeParamBlock sample_prior(const PriorHyper& hyper, const std::vector<int>& reduced_dims, Rng& rng,
                            bool intercept = false);
EdgeParamBlock sample_prior(const PriorHyper& hyper, const std::vector<int>& reduced_dims,
                            std::uint64_t seed, bool intercept = false);

/// Monte-Carlo profile of the marginal prior on a scalar coefficient
/// beta = theta * 1(|theta| > t) with theta = eta * xi from a single pxHS block.
struct MassProfile {
  std::vector<std::pair<double, double>> bins;  // (lo, hi]
  std::vector<double> mass;                     // fraction of nonzero draws per bin
  double zero_fraction = 0.0;
  long n_draws = 0;
  long n_nonzero = 0;
};

MassProfile nonlocal_mass_profile(const PriorHyper& hyper, long n_draws,
                                  const std::vector<std::pair<double, double>>& bins,
                                  std::uint64_t seed);

}  // namespace qdag
