#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qdag/rng.hpp"

namespace qdag {

/// A quantile level strictly inside (0, 1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau);
  double value() const noexcept { return tau_; }
  operator double() const noexcept { return tau_; }

 private:
  double tau_;
};

/// Fitted conditional quantiles of one node for every individual.
struct FittedQuantiles {
  int node = 0;
  Eigen::VectorXd values;
};

/// psi_tau(x) = tau*x for x >= 0, -(1-tau)*x otherwise.
inline double check_loss(double x, double tau) { return x >= 0.0 ? tau * x : -(1.0 - tau) * x; }
double check_loss(double x, QuantileLevel tau);

/// log of tau(1-tau) exp(-psi_tau(u)).
double al_logdensity(double u, QuantileLevel tau);

/// Draws one asymmetric-Laplace variate whose tau-quantile is zero.
double sample_al(Rng& rng, double tau);

/// Sum of asymmetric-Laplace log-densities of the residuals y - fitted.
double node_loglik(std::span<const double> y, std::span<const double> fitted, QuantileLevel tau);
double node_loglik(const Eigen::VectorXd& y, const FittedQuantiles& fitted, QuantileLevel tau);

/// Joint working log-likelihood; minus infinity when the union graph is cyclic.
double joint_loglik(const Eigen::MatrixXd& y, const std::vector<FittedQuantiles>& fitted_all,
                    bool union_is_dag, QuantileLevel tau);

}  // namespace qdag
