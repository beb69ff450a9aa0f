#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace graphrank {

using ItemIndex = std::size_t;

/// One paired comparison. `y` is on the merit-difference scale oriented
/// i-minus-j; `x` is the combined covariate x_ijk (empty when absent).
struct ComparisonRecord {
  ItemIndex i = 0;
  ItemIndex j = 0;
  double y = 0.0;
  std::vector<double> x;
};

/// Unordered item pair stored with i < j.
struct EdgeKey {
  ItemIndex i = 0;
  ItemIndex j = 0;

  static EdgeKey of(ItemIndex a, ItemIndex b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }
  auto operator<=>(const EdgeKey&) const = default;
};

/// Sufficient statistics of one edge, outcomes oriented i-minus-j with i < j.
struct EdgeStats {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

/// Strictly positive per-edge weights. Edges without an entry weigh 1.
class EdgeWeights {
 public:
  void set(ItemIndex a, ItemIndex b, double weight);
  double at(const EdgeKey& key) const;
  bool empty() const noexcept { return weights_.empty(); }
  const std::map<EdgeKey, double>& entries() const noexcept { return weights_; }

 private:
  std::map<EdgeKey, double> weights_;
};

enum class RetainRecords { no, yes };

/// Paired-comparison graph with multiplicities. Immutable once built.
class ComparisonGraph {
 public:
  ComparisonGraph() = default;

  std::size_t item_count() const noexcept { return item_count_; }
  /// n = sum over i<j of n_ij.
  std::size_t total_comparisons() const noexcept { return total_; }
  const std::map<EdgeKey, EdgeStats>& edges() const noexcept { return edges_; }
  /// Edge statistics for {a, b}, or nullptr when the pair was never compared.
  const EdgeStats* edge(ItemIndex a, ItemIndex b) const;
  std::size_t count(ItemIndex a, ItemIndex b) const;

  /// Score vector S with S_i = sum_j S_ij and S_ij = -S_ji.
  Eigen::VectorXd scores() const;
  /// Vertex degrees n_i (diagonal of the Laplacian).
  Eigen::VectorXd degrees() const;

  bool has_records() const noexcept { return retained_; }
  /// Retained records in canonical (i < j) orientation, ingestion order.
  const std::vector<ComparisonRecord>& records() const noexcept { return records_; }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  /// Label of item i, or its decimal index when no labels were attached.
  std::string label(ItemIndex i) const;

 private:
  friend class GraphBuilder;

  std::size_t item_count_ = 0;
  std::size_t total_ = 0;
  bool retained_ = false;
  std::map<EdgeKey, EdgeStats> edges_;
  std::vector<ComparisonRecord> records_;
  std::vector<std::string> labels_;
};

/// Incremental construction of a ComparisonGraph. Records with i > j are
/// flipped (outcome and covariates negated) before aggregation.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::size_t item_count, RetainRecords retain = RetainRecords::no);

  GraphBuilder& add(const ComparisonRecord& record);
  GraphBuilder& add(ItemIndex i, ItemIndex j, double y);
  /// Adds `count` comparisons of i against j at once. `sum` is oriented
  /// i-minus-j; `sum_sq` is orientation free. Not allowed when records are
  /// retained.
  GraphBuilder& add_aggregate(ItemIndex i, ItemIndex j, std::size_t count, double sum,
                              double sum_sq);
  GraphBuilder& labels(std::vector<std::string> labels);

  ComparisonGraph build() const&;
  ComparisonGraph build() &&;

 private:
  void check_pair(ItemIndex i, ItemIndex j) const;

  ComparisonGraph graph_;
};

ComparisonGraph build_graph(std::span<const ComparisonRecord> records, std::size_t item_count,
                            RetainRecords retain = RetainRecords::no);

/// Laplacian N (or N_w with weights): N_ii = sum_j w_ij n_ij, N_ij = -w_ij n_ij.
Eigen::MatrixXd laplacian(const ComparisonGraph& graph, const EdgeWeights* weights = nullptr);

/// Weighted score vector S_w with (S_w)_i = sum_j w_ij S_ij.
Eigen::VectorXd weighted_scores(const ComparisonGraph& graph, const EdgeWeights& weights);

bool is_connected(const ComparisonGraph& graph);

/// Connected components, each sorted, ordered by smallest member.
std::vector<std::vector<ItemIndex>> connected_components(const ComparisonGraph& graph);

struct BottleneckTree {
  std::size_t m = 0;
  std::vector<EdgeKey> tree;
};

/// Max over spanning trees of the minimum edge count, with one attaining tree
/// (a maximum spanning tree under n_ij). Throws IdentifiabilityError when the
/// graph is disconnected.
BottleneckTree bottleneck_m(const ComparisonGraph& graph);

}  // namespace graphrank
