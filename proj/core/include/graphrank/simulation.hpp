#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "graphrank/comparison_graph.hpp"
#include "graphrank/random.hpp"

namespace graphrank {

enum class TopologyKind { complete, cycle, path, star, wheel, tournament, erdos_renyi };

/// Throws ConfigError("topology") for an unknown name.
TopologyKind topology_from_name(const std::string& name);
std::string topology_name(TopologyKind kind);

struct TopologySpec {
  TopologyKind kind = TopologyKind::complete;
  std::size_t item_count = 0;
  std::size_t multiplicity = 1;   // n_ij on every present edge
  double edge_probability = 1.0;  // erdos_renyi only
  /// Rescale so trace(N)/2 equals the complete graph's comparison count.
  bool scale_to_complete = false;
};

/// Edge set plus a common per-edge weight (multiplicity times scale factor).
struct Topology {
  std::size_t item_count = 0;
  std::vector<EdgeKey> edges;
  double weight = 1.0;

  Eigen::MatrixXd laplacian() const;
};

/// Star and wheel are centred on item 0. In a tournament each round pairs the
/// surviving items in index order and the smaller index advances. Throws
/// ConfigError for a tournament whose size is not a power of two, for an edge
/// probability outside (0, 1], and for K < 2.
Topology generate_topology(const TopologySpec& spec, Rng& rng);

class ErrorLaw {
 public:
  enum class Kind { normal, t2, t3_scaled };

  static ErrorLaw normal(double sigma = 1.0);
  /// Student t with 2 degrees of freedom; mean zero, infinite variance.
  static ErrorLaw t2() { return ErrorLaw(Kind::t2, 1.0); }
  /// t(3) / sqrt(3), unit variance.
  static ErrorLaw t3_scaled() { return ErrorLaw(Kind::t3_scaled, 1.0); }
  /// "normal", "t2" or "t3_scaled"; throws ConfigError("error").
  static ErrorLaw named(const std::string& name, double sigma = 1.0);

  Kind kind() const noexcept { return kind_; }
  double sigma() const noexcept { return sigma_; }
  std::string name() const;
  double draw(Rng& rng) const;

 private:
  ErrorLaw(Kind kind, double sigma) : kind_(kind), sigma_(sigma) {}
  Kind kind_;
  double sigma_;
};

struct SeriesRow {
  std::string series;
  double x = 0.0;
  std::string metric;
  double estimate = 0.0;
  std::size_t replicates = 0;
};

struct SimulationReport {
  std::string campaign;
  nlohmann::json config;  // echo with defaults filled in
  std::uint64_t seed = 0;
  std::vector<SeriesRow> rows;
  std::map<std::string, std::size_t> counters;
  std::vector<std::string> warnings;

  /// Header series,x,metric,estimate,replicates; doubles printed round-trip.
  void write_csv(std::ostream& out) const;
  /// Config echo, seed, counters and warnings.
  nlohmann::json provenance() const;

  /// Estimate for (series, x, metric); throws DataError when absent.
  double value(const std::string& series, double x, const std::string& metric) const;
};

/// trace(N+) ("pinv_trace") and 1/lambda2 ("pinv_max_eigenvalue") per
/// topology (series) and K (x). Erdos-Renyi is not deterministic and is
/// rejected.
SimulationReport precision_profile(const std::vector<TopologyKind>& kinds,
                                   const std::vector<std::size_t>& item_counts, bool scale);

struct CovariateSettings {
  std::size_t dimension = 2;
  Eigen::VectorXd beta;  // defaults to all ones
};

struct ConsistencyConfig {
  TopologyKind topology = TopologyKind::complete;
  double edge_probability = 1.0;
  Eigen::VectorXd mu0;  // mu = mu0 * 10^-gamma
  std::vector<double> gammas{0.0};
  std::vector<std::size_t> m_grid;
  std::vector<ErrorLaw> errors{ErrorLaw::normal()};
  std::size_t replicates = 1000;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  /// Rademacher covariates; fits with and without them.
  std::optional<CovariateSettings> covariates;
};

/// Per (error law, gamma, m): mean of ||mu_hat - mu||_2 ("mse"), mean of the
/// squared norm ("mean_sq_norm"), median norm ("median_norm") and the
/// frequency of r(mu_hat) = r(mu) ("p_correct_rank"). Replicate r at grid
/// point m uses the stream (seed, m index, r) for every law and gamma.
SimulationReport run_consistency_campaign(const ConsistencyConfig& config);

struct SparseConfig {
  std::vector<std::size_t> item_counts;
  /// "1", "0.5", "log3" = (log K)^3 / K, "sqrt_log3" = sqrt((log K)^3 / K),
  /// or any decimal constant.
  std::vector<std::string> p_rules;
  /// "spread": (-(K-1), -(K-3), ..., K-1); "zero": all zero.
  std::string mu_rule = "spread";
  std::size_t replicates = 50;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  std::size_t max_redraws = 1000;
};

/// Evaluates a p rule at K; throws ConfigError("p_rules") when the result is
/// outside (0, 1] or the rule is unknown.
double evaluate_p_rule(const std::string& rule, std::size_t k);

/// Per (p rule, K): mean max_i |mu_hat_i - mu_i| for the least-squares fit
/// ("lse_max_error") and the row-sum estimator ("rowsum_max_error").
/// Disconnected graphs are redrawn and counted.
SimulationReport run_sparse_campaign(const SparseConfig& config);

/// Dispatches on config["campaign"] in {"precision", "consistency",
/// "sparse"}. A seed or thread count passed here overrides the file.
/// Throws ConfigError naming the offending field.
SimulationReport run_campaign(const nlohmann::json& config, std::optional<std::uint64_t> seed = {},
                              std::optional<unsigned> threads = {});

}  // namespace graphrank
