#include "qdag/prior.hpp"

#include <cmath>

#include "qdag/error.hpp"

namespace qdag {

void PriorHyper::validate() const {
  if (!(sigma_m > 0 && sigma_mu > 0 && sigma_mu_intercept > 0 && a > 0 && b > 0)) {
    throw ConfigError("prior hyperparameters must all be positive");
  }
}

std::vector<int> ModelDesign::reduced_dims() const {
  std::vector<int> dims;
  dims.reserve(bases.size());
  for (const auto& b : bases) dims.push_back(b.reduced_dim);
  return dims;
}

ModelDesign make_design(const Eigen::MatrixXd& covariates, int num_basis, double var_threshold) {
  ModelDesign d;
  d.covariates = covariates;
  for (int k = 0; k < covariates.cols(); ++k) {
    const Eigen::VectorXd col = covariates.col(k);
    d.bases.push_back(make_spline_basis(
        std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), k, num_basis,
        var_threshold));
  }
  return d;
}

EdgeParamBlock make_edge_block(const std::vector<int>& reduced_dims) {
  EdgeParamBlock e;
  for (int dim : reduced_dims) {
    PxhsBlock nl;
    nl.xi = Eigen::VectorXd::Ones(dim);
    nl.m = Eigen::VectorXd::Ones(dim);
    e.nonlinear.blocks.push_back(nl);
    PxhsBlock lin;
    lin.xi = Eigen::VectorXd::Ones(1);
    lin.m = Eigen::VectorXd::Ones(1);
    e.linear.blocks.push_back(lin);
  }
  return e;
}

Eigen::VectorXd compute_theta(const ModelDesign& design, const EdgeParamBlock& params) {
  const int q = design.q();
  if (static_cast<int>(params.nonlinear.blocks.size()) != q ||
      static_cast<int>(params.linear.blocks.size()) != q) {
    throw DimensionError("parameter blocks do not match the number of covariates");
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(design.n(), params.mu);
  for (int k = 0; k < q; ++k) {
    const PxhsBlock& nl = params.nonlinear.blocks[k];
    if (nl.dim() != design.bases[k].reduced_dim) {
      throw DimensionError("spline block dimension does not match reduced basis");
    }
    theta.noalias() += design.bases[k].design_reduced * (nl.eta * nl.xi);
    const PxhsBlock& lin = params.linear.blocks[k];
    if (lin.dim() != 1) throw DimensionError("linear blocks must be scalar");
    theta += (lin.eta * lin.xi[0]) * design.covariates.col(k);
  }
  return theta;
}

Eigen::VectorXd compute_beta(const Eigen::VectorXd& theta, double threshold) {
  if (!(threshold > 0.0)) throw InputError("threshold must be positive");
  Eigen::VectorXd beta(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) beta[i] = threshold_value(theta[i], threshold);
  return beta;
}

namespace {

void draw_group(PxhsGroup& g, const PriorHyper& hyper, Rng& rng) {
  g.c = rng.inv_gamma(0.5, 1.0);
  g.T2 = rng.inv_gamma(0.5, 1.0 / g.c);
  for (auto& blk : g.blocks) {
    blk.zeta = rng.inv_gamma(0.5, 1.0);
    blk.L2 = rng.inv_gamma(0.5, 1.0 / blk.zeta);
    blk.eta = rng.normal(0.0, std::sqrt(g.T2 * blk.L2));
    for (int l = 0; l < blk.dim(); ++l) {
      blk.m[l] = rng.bernoulli(0.5) ? 1.0 : -1.0;
      blk.xi[l] = rng.normal(blk.m[l], hyper.sigma_m);
    }
  }
}

}  // namespace

EdgeParamBlock sample_prior(const PriorHyper& hyper, const std::vector<int>& reduced_dims, Rng& rng,
                            bool intercept) {
  hyper.validate();
  EdgeParamBlock e = make_edge_block(reduced_dims);
  e.mu = rng.normal(0.0, intercept ? hyper.sigma_mu_intercept : hyper.sigma_mu);
  draw_group(e.nonlinear, hyper, rng);
  draw_group(e.linear, hyper, rng);
  e.threshold = rng.gamma(hyper.a, hyper.b);
  return e;
}

EdgeParamBlock sample_prior(const PriorHyper& hyper, const std::vector<int>& reduced_dims,
                            std::uint64_t seed, bool intercept) {
  Rng rng(seed);
  return sample_prior(hyper, reduced_dims, rng, intercept);
}

MassProfile nonlocal_mass_profile(const PriorHyper& hyper, long n_draws,
                                  const std::vector<std::pair<double, double>>& bins,
                                  std::uint64_t seed) {
  hyper.validate();
  if (n_draws < 10000) throw ConfigError("mass profile needs at least 1e4 draws");
  MassProfile out;
  out.bins = bins;
  out.mass.assign(bins.size(), 0.0);
  out.n_draws = n_draws;
  Rng rng(seed);
  long zeros = 0;
  // Scalar reduction: one covariate-free block, theta = eta * xi.
  const std::vector<int> dims{1};
  for (long d = 0; d < n_draws; ++d) {
    PxhsGroup g;
    g.blocks.resize(1);
    g.blocks[0].xi = Eigen::VectorXd::Ones(1);
    g.blocks[0].m = Eigen::VectorXd::Ones(1);
    draw_group(g, hyper, rng);
    const double theta = g.blocks[0].eta * g.blocks[0].xi[0];
    const double t = rng.gamma(hyper.a, hyper.b);
    const double beta = threshold_value(theta, t);
    if (beta == 0.0) {
      ++zeros;
      continue;
    }
    const double mag = std::abs(beta);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (mag > bins[b].first && mag <= bins[b].second) out.mass[b] += 1.0;
    }
  }
  out.n_nonzero = n_draws - zeros;
  out.zero_fraction = static_cast<double>(zeros) / static_cast<double>(n_draws);
  if (out.n_nonzero > 0) {
    for (double& m : out.mass) m /= static_cast<double>(out.n_nonzero);
  }
  return out;
}

}  // namespace qdag
