#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "graphrank/comparison_graph.hpp"

namespace graphrank {

/// Identifiability constraint v'mu = 0 with v'1 != 0.
class Constraint {
 public:
  enum class Kind { sum_zero, anchor, custom };

  static Constraint sum_zero() { return Constraint(Kind::sum_zero, 0, {}); }
  static Constraint anchor(ItemIndex item) { return Constraint(Kind::anchor, item, {}); }
  /// Throws DataError when v is (numerically) a contrast.
  static Constraint custom(Eigen::VectorXd v);

  Kind kind() const noexcept { return kind_; }
  ItemIndex anchor_item() const noexcept { return anchor_; }

  /// Materializes v for k items; validates anchor range and custom length.
  Eigen::VectorXd vector(std::size_t k) const;

  /// C_v = I - 1 v' / (v'1): maps any solution of the normal equations onto
  /// the constraint set.
  Eigen::MatrixXd projector(std::size_t k) const;

  bool operator==(const Constraint&) const = default;

 private:
  Constraint(Kind kind, ItemIndex anchor, Eigen::VectorXd v)
      : kind_(kind), anchor_(anchor), custom_(std::move(v)) {}

  Kind kind_;
  ItemIndex anchor_;
  Eigen::VectorXd custom_;
};

/// r_i = #{j : mu_i <= mu_j}; rank 1 is the largest merit.
struct RankVector {
  std::vector<int> r;

  bool has_ties() const;
  bool operator==(const RankVector&) const = default;
};

RankVector ranks(const Eigen::VectorXd& mu);

enum class VarianceDivisor {
  total_comparisons,   // sigma2 = Q / n
  degrees_of_freedom,  // sigma2 = Q / (n - (K - 1))
};

struct FitOptions {
  const EdgeWeights* weights = nullptr;
  VarianceDivisor divisor = VarianceDivisor::total_comparisons;
  /// Eigen-decomposition based diagnostics (lambda2, bottleneck m). Off in
  /// simulation inner loops.
  bool diagnostics = true;
};

struct FitDiagnostics {
  bool connected = true;
  double lambda2 = 0.0;
  std::size_t bottleneck_m = 0;
  std::vector<EdgeKey> bottleneck_tree;
  bool computed = false;
};

struct MeritFit {
  Eigen::VectorXd mu_hat;
  Constraint constraint = Constraint::sum_zero();
  double residual_ss = 0.0;  // Q(mu_hat), weighted when weights are used
  double sigma2_hat = 0.0;
  bool perfect_fit = false;  // residuals vanish to rounding; sigma2_hat ~ 0
  Eigen::MatrixXd cov;    // sigma2_hat * C_v N+ C_v'
  Eigen::MatrixXd n_pinv;  // N+ (or N_w+)
  std::size_t n = 0;
  FitDiagnostics diagnostics;
  RankVector rank;
};

/// Constrained least-squares merits mu = C_v N+ S. Throws
/// IdentifiabilityError on a disconnected graph and DataError when n = 0.
MeritFit fit(const ComparisonGraph& graph, const Constraint& constraint = Constraint::sum_zero(),
             const FitOptions& options = {});

/// Q(mu) = sum over comparisons of (Y_ijk - (mu_i - mu_j))^2, from the
/// graph's sufficient statistics.
double objective(const ComparisonGraph& graph, const Eigen::VectorXd& mu,
                 const EdgeWeights* weights = nullptr);

/// Re-expresses a fit under another constraint via C_u C_v+ without
/// re-solving.
MeritFit reconstrain(const MeritFit& fit, const Constraint& u);

/// Var(mu_i - mu_j) = sigma2 (N+_ii + N+_jj - 2 N+_ij).
double pairwise_difference_variance(const MeritFit& fit, ItemIndex i, ItemIndex j);

/// Row-sum estimator S_i / N_ii. Throws DataError on an isolated vertex.
Eigen::VectorXd row_sum_estimate(const ComparisonGraph& graph);

}  // namespace graphrank
