#pragma once

#include <Eigen/Dense>
#include <span>

namespace qdag {

/// Cubic B-spline basis for one covariate together with its spectral
/// reparameterization. `design_reduced` (n x B*) replaces the raw design in
/// the model; its columns span the penalized (non-constant, non-linear) part.
struct SplineBasis {
  int covariate_index = 0;       // 0-based column of the covariate matrix
  Eigen::MatrixXd design_raw;    // n x B
  Eigen::MatrixXd design_reduced;  // n x B*, equals eigvecs * diag(sqrt(eigvals))
  Eigen::VectorXd eigvals;       // length B*, descending, strictly positive
  Eigen::MatrixXd eigvecs;       // n x B*, orthonormal columns
  int reduced_dim = 0;
  Eigen::VectorXd knots;         // full (extended) knot vector, ascending

  int n() const { return static_cast<int>(design_reduced.rows()); }
};

inline constexpr int kDefaultNumBasis = 20;
inline constexpr int kDefaultDegree = 3;
inline constexpr double kDefaultVarThreshold = 0.995;

/// Equally spaced knot vector for `num_basis` B-splines of `degree` over the
/// observed range of x padded by 1e-6 of its width on each side. Exterior
/// knots continue the same spacing.
Eigen::VectorXd equally_spaced_knots(std::span<const double> x, int num_basis, int degree);

/// n x B design whose row r holds every basis function evaluated at x[r].
Eigen::MatrixXd build_bspline_design(std::span<const double> x, int num_basis = kDefaultNumBasis,
                                     int degree = kDefaultDegree);

/// Evaluates the basis on an explicit knot vector (length B + degree + 1).
Eigen::MatrixXd bspline_design_on_knots(std::span<const double> x, const Eigen::VectorXd& knots,
                                        int degree);

/// Second-order difference penalty D2^T D2 (B x B, rank B-2).
Eigen::MatrixXd penalty_matrix(int num_basis);

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix; eigenvalues below
/// rel_tol * max eigenvalue are treated as zero.
Eigen::MatrixXd pseudo_inverse_psd(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

/// Spectral reparameterization of design_raw * pinv(penalty) * design_raw^T,
/// keeping leading eigenpairs until their share of the positive spectrum
/// reaches var_threshold.
SplineBasis reparameterize(const Eigen::MatrixXd& design_raw, const Eigen::MatrixXd& penalty,
                           double var_threshold = kDefaultVarThreshold);

/// Design, penalty and reparameterization for one covariate. The design
/// columns are centred before reparameterizing; design_raw keeps the raw basis.
SplineBasis make_spline_basis(std::span<const double> x, int covariate_index,
                              int num_basis = kDefaultNumBasis,
                              double var_threshold = kDefaultVarThreshold);

}  // namespace qdag
