#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace graphrank {

/// Spectrum-derived precision diagnostics of a Laplacian.
struct SpectralSummary {
  Eigen::VectorXd eigenvalues;  // ascending
  double lambda2 = 0.0;         // algebraic connectivity
  Eigen::VectorXd fiedler;      // unit eigenvector of lambda2
  double pinv_trace = 0.0;      // sum of 1/lambda over lambda > tolerance
  /// Largest eigenvalue of N+, i.e. 1/lambda2 on a connected graph.
  double pinv_max_eigenvalue = 0.0;
  double tolerance = 0.0;
  bool connected = false;
};

/// dim * machine-eps * largest, the numerical-rank cutoff used throughout.
double rank_tolerance(Eigen::Index dim, double largest);

/// Moore-Penrose inverse of a connected-graph Laplacian through
/// N+ = (N + J/K)^-1 - J/K. Throws IdentifiabilityError naming the
/// components when the Laplacian's graph is disconnected.
Eigen::MatrixXd pinv_laplacian(const Eigen::MatrixXd& laplacian);

/// Moore-Penrose inverse of a symmetric PSD matrix. With a unit
/// `known_kernel` q spanning ker(A), uses (A + qq')^-1 - qq'; otherwise (or
/// if that shortcut is inapplicable) inverts the eigenvalues above
/// rank_tolerance.
Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd& a,
                               const std::optional<Eigen::VectorXd>& known_kernel = std::nullopt);

SpectralSummary spectral_summary(const Eigen::MatrixXd& laplacian);

/// Connected components read off the off-diagonal sparsity of a Laplacian.
std::vector<std::vector<std::size_t>> laplacian_components(const Eigen::MatrixXd& laplacian);

/// Smallest principal angle between the column spans of a and b, in [0, pi/2].
double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Orthonormal basis of the column span (numerical rank via rank_tolerance).
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& a);

/// Algebraic connectivity of the unit-weight path graph on k vertices,
/// 2(1 - cos(pi/k)).
double path_algebraic_connectivity(std::size_t k);

}  // namespace graphrank
