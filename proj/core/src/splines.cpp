#include "qdag/splines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qdag/error.hpp"

namespace qdag {

Eigen::VectorXd equally_spaced_knots(std::span<const double> x, int num_basis, int degree) {
  if (x.size() < 2) throw InputError("spline covariate needs at least two observations");
  if (degree < 0) throw DimensionError("spline degree must be non-negative");
  if (num_basis < degree + 1) {
    throw DimensionError("number of basis functions " + std::to_string(num_basis) +
                         " must be at least degree+1 = " + std::to_string(degree + 1));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("spline covariate contains non-finite values");
  }
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double width = *mx - *mn;
  if (!(width > 0.0)) throw DegenerateError("spline covariate is constant");

  const double pad = 1e-6 * width;
  const double lo = *mn - pad;
  const double hi = *mx + pad;
  const int segments = num_basis - degree;
  const double dx = (hi - lo) / segments;
  Eigen::VectorXd knots(num_basis + degree + 1);
  for (int i = 0; i < knots.size(); ++i) knots[i] = lo + (i - degree) * dx;
  return knots;
}

Eigen::MatrixXd bspline_design_on_knots(std::span<const double> x, const Eigen::VectorXd& knots,
                                        int degree) {
  const int num_basis = static_cast<int>(knots.size()) - degree - 1;
  if (num_basis < 1) throw DimensionError("knot vector too short for the requested degree");
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, num_basis);

  // Valid evaluation range is [knots[degree], knots[num_basis]].
  const double left = knots[degree];
  const double right = knots[num_basis];
  std::vector<double> work(degree + 1);
  for (int r = 0; r < n; ++r) {
    const double v = x[r];
    if (!std::isfinite(v)) throw InputError("spline covariate contains non-finite values");
    if (v < left || v > right) continue;
    // Locate span s with knots[s] <= v < knots[s+1], s in [degree, num_basis-1].
    int s = static_cast<int>(std::upper_bound(knots.data(), knots.data() + knots.size(), v) -
                             knots.data()) - 1;
    s = std::clamp(s, degree, num_basis - 1);

    // Triangular de Boor evaluation of the degree+1 non-vanishing bases.
    work[0] = 1.0;
    for (int d = 1; d <= degree; ++d) {
      double saved = 0.0;
      for (int r2 = 0; r2 < d; ++r2) {
        const double kl = knots[s + r2 + 1];
        const double kr = knots[s + r2 + 1 - d];
        const double tmp = work[r2] / (kl - kr);
        work[r2] = saved + (kl - v) * tmp;
        saved = (v - kr) * tmp;
      }
      work[d] = saved;
    }
    for (int b = 0; b <= degree; ++b) out(r, s - degree + b) = work[b];
  }
  return out;
}

Eigen::MatrixXd build_bspline_design(std::span<const double> x, int num_basis, int degree) {
  const Eigen::VectorXd knots = equally_spaced_knots(x, num_basis, degree);
  return bspline_design_on_knots(x, knots, degree);
}

Eigen::MatrixXd penalty_matrix(int num_basis) {
  if (num_basis < 3) throw DimensionError("second-difference penalty needs at least 3 bases");
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(num_basis - 2, num_basis);
  for (int i = 0; i < num_basis - 2; ++i) {
    d2(i, i) = 1.0;
    d2(i, i + 1) = -2.0;
    d2(i, i + 2) = 1.0;
  }
  return d2.transpose() * d2;
}

Eigen::MatrixXd pseudo_inverse_psd(const Eigen::MatrixXd& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cutoff = rel_tol * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff) inv[i] = 1.0 / ev[i];
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

SplineBasis reparameterize(const Eigen::MatrixXd& design_raw, const Eigen::MatrixXd& penalty,
                           double var_threshold) {
  if (!(var_threshold > 0.0 && var_threshold <= 1.0)) {
    throw ConfigError("variance threshold must lie in (0, 1]");
  }
  if (penalty.rows() != design_raw.cols() || penalty.cols() != design_raw.cols()) {
    throw DimensionError("penalty must be B x B for an n x B design");
  }
  if (design_raw.cwiseAbs().maxCoeff() == 0.0) throw DegenerateError("spline design is all zero");

  // Factor pinv(penalty) = V diag(1/lambda) V^T on its range, so the n x n
  // covariance is A A^T with A = design * V diag(lambda^-1/2). An SVD of A
  // yields its eigenpairs without forming the n x n matrix.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> peig(penalty);
  const Eigen::VectorXd& lam = peig.eigenvalues();
  const double cutoff = 1e-10 * lam.cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] > cutoff) keep.push_back(i);
  }
  Eigen::MatrixXd half(penalty.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    half.col(static_cast<Eigen::Index>(c)) = peig.eigenvectors().col(keep[c]) / std::sqrt(lam[keep[c]]);
  }
  const Eigen::MatrixXd a = design_raw * half;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const Eigen::VectorXd sv = svd.singularValues();
  Eigen::VectorXd ev = sv.array().square().matrix();

  const double ev_cut = 1e-10 * (ev.size() > 0 ? ev[0] : 0.0);
  int positive = 0;
  double total = 0.0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > ev_cut) {
      ++positive;
      total += ev[i];
    }
  }
  if (positive == 0 || !(total > 0.0)) throw DegenerateError("penalized design has no variability");

  int dim = 0;
  double acc = 0.0;
  while (dim < positive) {
    acc += ev[dim];
    ++dim;
    if (acc / total >= var_threshold) break;
  }

  SplineBasis out;
  out.design_raw = design_raw;
  out.reduced_dim = dim;
  out.eigvals = ev.head(dim);
  out.eigvecs = svd.matrixU().leftCols(dim);
  out.design_reduced = out.eigvecs * out.eigvals.cwiseSqrt().asDiagonal();
  return out;
}

SplineBasis make_spline_basis(std::span<const double> x, int covariate_index, int num_basis,
                              double var_threshold) {
  const Eigen::VectorXd knots = equally_spaced_knots(x, num_basis, kDefaultDegree);
  const Eigen::MatrixXd design = bspline_design_on_knots(x, knots, kDefaultDegree);
  // The node intercept mu already carries the constant, so the smooth part is
  // centred over the sample before the spectral step.
  const Eigen::MatrixXd centred = design.rowwise() - design.colwise().mean();
  SplineBasis basis = reparameterize(centred, penalty_matrix(num_basis), var_threshold);
  basis.design_raw = design;
  basis.covariate_index = covariate_index;
  basis.knots = knots;
  return basis;
}

}  // namespace qdag
