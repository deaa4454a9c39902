#include "qdag/quantile_loss.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qdag/error.hpp"

namespace qdag {

QuantileLevel::QuantileLevel(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw InputError("quantile level must lie in (0, 1), got " + std::to_string(tau));
  }
}

double check_loss(double x, QuantileLevel tau) { return check_loss(x, tau.value()); }

double al_logdensity(double u, QuantileLevel tau) {
  const double t = tau.value();
  return std::log(t) + std::log1p(-t) - check_loss(u, t);
}

double sample_al(Rng& rng, double tau) {
  // P(u < 0) = tau; each half is exponential with rate (1-tau) resp. tau.
  if (rng.uniform() < tau) return -rng.exponential(1.0 - tau);
  return rng.exponential(tau);
}

double node_loglik(std::span<const double> y, std::span<const double> fitted, QuantileLevel tau) {
  if (y.size() != fitted.size()) {
    throw DimensionError("node_loglik: response has " + std::to_string(y.size()) +
                         " entries but fitted has " + std::to_string(fitted.size()));
  }
  const double t = tau.value();
  const double norm = std::log(t) + std::log1p(-t);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += check_loss(y[i] - fitted[i], t);
  return static_cast<double>(y.size()) * norm - loss;
}

double node_loglik(const Eigen::VectorXd& y, const FittedQuantiles& fitted, QuantileLevel tau) {
  return node_loglik(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                     std::span<const double>(fitted.values.data(),
                                             static_cast<std::size_t>(fitted.values.size())),
                     tau);
}

double joint_loglik(const Eigen::MatrixXd& y, const std::vector<FittedQuantiles>& fitted_all,
                    bool union_is_dag, QuantileLevel tau) {
  if (static_cast<Eigen::Index>(fitted_all.size()) != y.cols()) {
    throw DimensionError("joint_loglik needs fitted quantiles for every node");
  }
  if (!union_is_dag) return -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& f : fitted_all) {
    if (f.node < 0 || f.node >= y.cols()) throw DimensionError("fitted node index out of range");
    const Eigen::VectorXd col = y.col(f.node);
    total += node_loglik(col, f, tau);
  }
  return total;
}

}  // namespace qdag
