#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphrank/comparison_graph.hpp"
#include "graphrank/estimator.hpp"

namespace graphrank {

/// Covariate combination rule x_ijk = psi(x_ik, x_jk). Must be antisymmetric,
/// psi(u, v) = -psi(v, u); custom rules are spot-checked on registration.
class Psi {
 public:
  using Function =
      std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;

  /// psi(u, v) = u - v.
  static Psi difference();
  static Psi custom(std::string name, Function f);
  /// Looks up a registered rule by name ("diff").
  static Psi named(const std::string& name);

  const std::string& name() const noexcept { return name_; }
  std::vector<double> operator()(std::span<const double> u, std::span<const double> v) const;

 private:
  Psi(std::string name, Function f) : name_(std::move(name)), f_(std::move(f)) {}

  std::string name_;
  Function f_;
};

/// A comparison carrying per-side covariates (x_ik for item i, x_jk for j).
struct SidedComparison {
  ItemIndex i = 0;
  ItemIndex j = 0;
  double y = 0.0;
  std::vector<double> xi;
  std::vector<double> xj;
};

ComparisonRecord combine(const SidedComparison& c, const Psi& psi);

/// Stacked linear model Y = M mu + X beta + e, rows in lexicographic (i, j, k)
/// order with i < j.
struct CovariateDesign {
  std::size_t item_count = 0;
  Eigen::MatrixXd m;  // n x K incidence: +1 at i, -1 at j
  Eigen::MatrixXd x;  // n x p
  Eigen::VectorXd y;  // n
  std::string psi_name = "diff";

  Eigen::Index rows() const noexcept { return m.rows(); }
  Eigen::Index covariate_count() const noexcept { return x.cols(); }
  /// M'M, equal to the graph Laplacian.
  Eigen::MatrixXd laplacian() const { return m.transpose() * m; }
  /// M'Y, equal to the score vector.
  Eigen::VectorXd scores() const { return m.transpose() * y; }
  /// H = (M, X).
  Eigen::MatrixXd design_matrix() const;
};

/// Records already carry combined covariates x_ijk (equal length p >= 0).
CovariateDesign build_design(std::span<const ComparisonRecord> records, std::size_t item_count);
CovariateDesign build_design(std::span<const SidedComparison> records, std::size_t item_count,
                             const Psi& psi);

/// Subtracts each covariate column's mean.
CovariateDesign center_covariates(CovariateDesign design);

struct IdentifiabilityReport {
  Eigen::Index rank_m = 0;
  Eigen::Index rank_residual_x = 0;
  bool identifiable = false;
  std::vector<std::vector<std::size_t>> components;
  /// Unit coefficient vectors c with X c (numerically) inside im(M).
  std::vector<Eigen::VectorXd> offending_directions;
};

/// rank(M) = K-1 and rank((I - M M+) X) = p.
IdentifiabilityReport check_identifiability(const CovariateDesign& design);

struct CovariateFit {
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd beta_hat;
  Constraint constraint = Constraint::sum_zero();
  double residual_ss = 0.0;
  double sigma2_hat = 0.0;
  bool perfect_fit = false;  // sigma2_hat == 0
  /// (K+p) x (K+p): sigma2 (H'H)+ with the mu block mapped by C_v.
  Eigen::MatrixXd cov;
  Eigen::MatrixXd n_pinv;
  std::size_t n = 0;
  IdentifiabilityReport identifiability;
  std::optional<double> angle_phi;  // absent when p = 0
  RankVector rank;
};

/// beta = (X'(I - M N+ M')X)^-1 X'(I - M N+ M')Y, mu = C_v N+(S - M'X beta).
CovariateFit fit_with_covariates(const CovariateDesign& design,
                                 const Constraint& constraint = Constraint::sum_zero(),
                                 VarianceDivisor divisor = VarianceDivisor::total_comparisons);

/// Finite-sample bias N+ M'X beta of the covariate-omitting fit.
Eigen::VectorXd misspecification_bias(const CovariateDesign& design, const Eigen::VectorXd& beta);

/// Average Kullback-Leibler divergence between the normal model with
/// covariates (mu_t, beta) and the one without (mu_m):
/// (d'N d + 2 beta'X'M d + beta'X'X beta) / (2 n sigma2), d = mu_t - mu_m.
double akl_normal(const CovariateDesign& design, const Eigen::VectorXd& mu_t,
                  const Eigen::VectorXd& beta, const Eigen::VectorXd& mu_m, double sigma2);

/// max_i |h_i|^2 / lambda2(H'H).
double hajek_sidak_ratio(const CovariateDesign& design);

}  // namespace graphrank
