#include "graphrank/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "graphrank/errors.hpp"
#include "union_find.hpp"

namespace graphrank {
namespace {

void check_symmetric(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) throw DataError(std::string(what) + ": matrix is not square");
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DataError(std::string(what) + ": matrix is not symmetric");
  }
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

Eigen::MatrixXd pinv_eigen(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double largest = lam.cwiseAbs().maxCoeff();
  const double tol = rank_tolerance(a.rows(), largest);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (std::abs(lam[i]) > tol) inv[i] = 1.0 / lam[i];
  }
  const Eigen::MatrixXd& u = es.eigenvectors();
  return symmetrize(u * inv.asDiagonal() * u.transpose());
}

}  // namespace

double rank_tolerance(Eigen::Index dim, double largest) {
  return static_cast<double>(std::max<Eigen::Index>(dim, 1)) *
         std::numeric_limits<double>::epsilon() * largest;
}

std::vector<std::vector<std::size_t>> laplacian_components(const Eigen::MatrixXd& laplacian) {
  const auto k = static_cast<std::size_t>(laplacian.rows());
  detail::UnionFind uf(k);
  for (Eigen::Index i = 0; i < laplacian.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < laplacian.cols(); ++j) {
      if (laplacian(i, j) != 0.0) uf.unite(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return uf.groups();
}

Eigen::MatrixXd pinv_laplacian(const Eigen::MatrixXd& laplacian) {
  check_symmetric(laplacian, "pinv_laplacian");
  const Eigen::Index k = laplacian.rows();
  if (k == 0) return {};
  auto components = laplacian_components(laplacian);
  if (components.size() > 1) {
    throw IdentifiabilityError("comparison graph is disconnected: " +
                                   std::to_string(components.size()) + " components",
                               std::move(components));
  }
  const double inv_k = 1.0 / static_cast<double>(k);
  const Eigen::MatrixXd j_over_k = Eigen::MatrixXd::Constant(k, k, inv_k);
  Eigen::LLT<Eigen::MatrixXd> llt(laplacian + j_over_k);
  if (llt.info() != Eigen::Success) {
    throw IdentifiabilityError("Laplacian is numerically rank deficient (algebraic connectivity ~ 0)");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
  return symmetrize(inv - j_over_k);
}

Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd& a,
                               const std::optional<Eigen::VectorXd>& known_kernel) {
  check_symmetric(a, "pinv_symmetric");
  if (a.size() == 0) return {};
  if (known_kernel) {
    if (known_kernel->size() != a.rows()) throw DataError("pinv_symmetric: kernel length mismatch");
    const double qn = known_kernel->norm();
    if (qn == 0.0) throw DataError("pinv_symmetric: zero kernel vector");
    const Eigen::VectorXd q = *known_kernel / qn;
    const double scale = a.cwiseAbs().maxCoeff();
    if ((a * q).norm() <= 1e-10 * std::max(scale, 1.0)) {
      const Eigen::MatrixXd qq = q * q.transpose();
      Eigen::LLT<Eigen::MatrixXd> llt(a + qq);
      if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
        return symmetrize(inv - qq);
      }
    }
    // Kernel hint does not fit (rank below dim-1 or q not null); eigen route.
  }
  return pinv_eigen(a);
}

SpectralSummary spectral_summary(const Eigen::MatrixXd& laplacian) {
  check_symmetric(laplacian, "spectral_summary");
  SpectralSummary out;
  const Eigen::Index k = laplacian.rows();
  if (k == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian);
  out.eigenvalues = es.eigenvalues();
  const double largest = out.eigenvalues.cwiseAbs().maxCoeff();
  out.tolerance = rank_tolerance(k, largest);
  if (k >= 2) {
    out.lambda2 = std::max(out.eigenvalues[1], 0.0);
    out.fiedler = es.eigenvectors().col(1);
  }
  out.connected = k >= 2 && out.eigenvalues[1] > out.tolerance;
  double smallest_positive = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < k; ++i) {
    const double lam = out.eigenvalues[i];
    if (lam > out.tolerance) {
      out.pinv_trace += 1.0 / lam;
      smallest_positive = std::min(smallest_positive, lam);
    }
  }
  out.pinv_max_eigenvalue = std::isinf(smallest_positive) ? 0.0 : 1.0 / smallest_positive;
  return out;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return Eigen::MatrixXd(a.rows(), 0);
  const double tol = rank_tolerance(std::max(a.rows(), a.cols()), s[0]);
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw DataError("principal_angle: row count mismatch");
  Eigen::MatrixXd qa = orthonormal_basis(a);
  Eigen::MatrixXd qb = orthonormal_basis(b);
  if (qa.cols() == 0 || qb.cols() == 0) throw DataError("principal_angle: zero matrix");
  if (qa.cols() < qb.cols()) std::swap(qa, qb);  // qb now spans the smaller subspace

  const Eigen::MatrixXd cross = qa.transpose() * qb;
  const double cos_max =
      std::clamp(Eigen::JacobiSVD<Eigen::MatrixXd>(cross).singularValues()[0], 0.0, 1.0);
  if (cos_max * cos_max < 0.5) return std::acos(cos_max);
  // Near-zero angles lose precision through acos; use the sines instead.
  const Eigen::MatrixXd residual = qb - qa * cross;
  const Eigen::VectorXd sines = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues();
  const double sin_min = std::clamp(sines[sines.size() - 1], 0.0, 1.0);
  return std::asin(sin_min);
}

double path_algebraic_connectivity(std::size_t k) {
  return 2.0 * (1.0 - std::cos(std::numbers::pi / static_cast<double>(k)));
}

}  // namespace graphrank
