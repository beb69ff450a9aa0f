#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphrank/comparison_graph.hpp"
#include "graphrank/estimator.hpp"
#include "graphrank/random.hpp"

namespace graphrank {

struct NullLaw {
  enum class Kind { chi_square, monte_carlo };
  Kind kind = Kind::chi_square;
  double df = 0.0;          // chi_square
  std::size_t draws = 0;    // monte_carlo
};

struct TestResult {
  std::string name;
  double statistic = 0.0;
  NullLaw null;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;  // p_value < alpha
};

inline constexpr std::size_t kDefaultMonteCarloDraws = 10000;
inline constexpr std::size_t kDefaultBootstrapReplicates = 200;

struct MonteCarloOptions {
  std::size_t draws = kDefaultMonteCarloDraws;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
};

// All tests read the merits through their differences, so the fit's
// constraint does not matter. They assume an unweighted fit of `graph`.
// Every test throws DegenerateFitError when the residual variance is zero.

/// mu'N mu / sigma2 ~ chi2(K-1); with a subset R of items,
/// mu_R' (N+_RR)^-1 mu_R / sigma2 ~ chi2(|R|) on sum-zero merits.
TestResult test_all_equal(const MeritFit& fit, const ComparisonGraph& graph,
                          std::span<const ItemIndex> subset = {}, double alpha = 0.05);

/// Wald statistic for equal merits within the subset using adjacent
/// differences; chi2(|R|-1).
TestResult test_contrasts(const MeritFit& fit, const ComparisonGraph& graph,
                          std::span<const ItemIndex> subset, double alpha = 0.05);

/// min over pairs n (mu_i - mu_j)^2; large values reject "some merits tie".
TestResult test_all_distinct(const MeritFit& fit, const ComparisonGraph& graph, double alpha = 0.05,
                             const MonteCarloOptions& mc = {});

/// sqrt(n) (mu_item - min_{j != item} mu_j); large values reject
/// "item is no better than the worst".
TestResult test_item_not_worst(const MeritFit& fit, const ComparisonGraph& graph, ItemIndex item,
                               double alpha = 0.05, const MonteCarloOptions& mc = {});

/// Pairwise contrast matrix D, rows (i, j) for i < j in lexicographic order.
Eigen::MatrixXd pairwise_contrasts(std::size_t k);
/// Rows e_item - e_j for every j != item in increasing j.
Eigen::MatrixXd contrasts_against(std::size_t k, ItemIndex item);

enum class RankMetric { cayley, kendall };

/// Throws DataError on ties, length mismatch or vectors that are not
/// permutations of 1..K.
std::size_t rank_distance(const RankVector& r1, const RankVector& r2, RankMetric metric);

struct BootstrapOptions {
  std::size_t replicates = kDefaultBootstrapReplicates;
  std::uint64_t seed = kDefaultSeed;
  bool with_covariates = false;
  unsigned threads = 1;
};

struct RankQuartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

struct BootstrapReport {
  std::size_t requested = 0;
  std::size_t skipped = 0;  // disconnected or non-identifiable resamples
  std::uint64_t seed = 0;
  RankVector point_ranks;
  /// One row per successful replicate, in replicate order.
  std::vector<RankVector> rank_samples;
  std::vector<RankQuartiles> quartiles;  // per item
};

/// Resamples records with replacement and refits each resample. Throws
/// IdentifiabilityError when more than half of the resamples are infeasible.
BootstrapReport bootstrap_ranks(std::span<const ComparisonRecord> records, std::size_t item_count,
                                const BootstrapOptions& options = {});

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);

}  // namespace graphrank
