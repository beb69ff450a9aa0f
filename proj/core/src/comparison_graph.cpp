#include "graphrank/comparison_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphrank/errors.hpp"
#include "union_find.hpp"

namespace graphrank {

void EdgeWeights::set(ItemIndex a, ItemIndex b, double weight) {
  if (a == b) throw DataError("edge weight on a self pair (" + std::to_string(a) + ")");
  if (!std::isfinite(weight) || weight <= 0.0) {
    throw DataError("edge weights must be finite and strictly positive");
  }
  weights_[EdgeKey::of(a, b)] = weight;
}

double EdgeWeights::at(const EdgeKey& key) const {
  const auto it = weights_.find(key);
  return it == weights_.end() ? 1.0 : it->second;
}

const EdgeStats* ComparisonGraph::edge(ItemIndex a, ItemIndex b) const {
  const auto it = edges_.find(EdgeKey::of(a, b));
  return it == edges_.end() ? nullptr : &it->second;
}

std::size_t ComparisonGraph::count(ItemIndex a, ItemIndex b) const {
  const EdgeStats* e = edge(a, b);
  return e ? e->count : 0;
}

Eigen::VectorXd ComparisonGraph::scores() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(item_count_));
  for (const auto& [key, stats] : edges_) {
    s[static_cast<Eigen::Index>(key.i)] += stats.sum;
    s[static_cast<Eigen::Index>(key.j)] -= stats.sum;
  }
  return s;
}

Eigen::VectorXd ComparisonGraph::degrees() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(item_count_));
  for (const auto& [key, stats] : edges_) {
    d[static_cast<Eigen::Index>(key.i)] += static_cast<double>(stats.count);
    d[static_cast<Eigen::Index>(key.j)] += static_cast<double>(stats.count);
  }
  return d;
}

std::string ComparisonGraph::label(ItemIndex i) const {
  return i < labels_.size() ? labels_[i] : std::to_string(i);
}

GraphBuilder::GraphBuilder(std::size_t item_count, RetainRecords retain) {
  if (item_count < 2) throw DataError("a comparison graph needs at least two items");
  graph_.item_count_ = item_count;
  graph_.retained_ = retain == RetainRecords::yes;
}

void GraphBuilder::check_pair(ItemIndex i, ItemIndex j) const {
  const std::size_t k = graph_.item_count_;
  if (i >= k || j >= k) {
    throw DataError("item index out of range: (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") with " + std::to_string(k) + " items");
  }
  if (i == j) throw DataError("an item cannot be compared with itself (" + std::to_string(i) + ")");
}

GraphBuilder& GraphBuilder::add(const ComparisonRecord& record) {
  check_pair(record.i, record.j);
  if (!std::isfinite(record.y)) throw DataError("non-finite outcome");
  ComparisonRecord canon = record;
  if (canon.i > canon.j) {
    std::swap(canon.i, canon.j);
    canon.y = -canon.y;
    for (double& v : canon.x) v = -v;
  }
  EdgeStats& stats = graph_.edges_[EdgeKey{canon.i, canon.j}];
  ++stats.count;
  stats.sum += canon.y;
  stats.sum_sq += canon.y * canon.y;
  ++graph_.total_;
  if (graph_.retained_) graph_.records_.push_back(std::move(canon));
  return *this;
}

GraphBuilder& GraphBuilder::add(ItemIndex i, ItemIndex j, double y) {
  return add(ComparisonRecord{i, j, y, {}});
}

GraphBuilder& GraphBuilder::add_aggregate(ItemIndex i, ItemIndex j, std::size_t count, double sum,
                                          double sum_sq) {
  check_pair(i, j);
  if (graph_.retained_) throw DataError("aggregated comparisons cannot be retained as records");
  if (count == 0) return *this;
  EdgeStats& stats = graph_.edges_[EdgeKey::of(i, j)];
  stats.count += count;
  stats.sum += i < j ? sum : -sum;
  stats.sum_sq += sum_sq;
  graph_.total_ += count;
  return *this;
}

GraphBuilder& GraphBuilder::labels(std::vector<std::string> labels) {
  if (labels.size() != graph_.item_count_) {
    throw DataError("label count does not match the item count");
  }
  graph_.labels_ = std::move(labels);
  return *this;
}

ComparisonGraph GraphBuilder::build() const& { return graph_; }
ComparisonGraph GraphBuilder::build() && { return std::move(graph_); }

ComparisonGraph build_graph(std::span<const ComparisonRecord> records, std::size_t item_count,
                            RetainRecords retain) {
  GraphBuilder builder(item_count, retain);
  for (const ComparisonRecord& r : records) builder.add(r);
  return std::move(builder).build();
}

Eigen::MatrixXd laplacian(const ComparisonGraph& graph, const EdgeWeights* weights) {
  const auto k = static_cast<Eigen::Index>(graph.item_count());
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(k, k);
  if (weights) {
    for (const auto& [key, w] : weights->entries()) {
      if (!graph.edge(key.i, key.j)) {
        throw DataError("weight supplied for a non-edge (" + std::to_string(key.i) + ", " +
                        std::to_string(key.j) + ")");
      }
    }
  }
  for (const auto& [key, stats] : graph.edges()) {
    const double w = (weights ? weights->at(key) : 1.0) * static_cast<double>(stats.count);
    const auto a = static_cast<Eigen::Index>(key.i);
    const auto b = static_cast<Eigen::Index>(key.j);
    n(a, a) += w;
    n(b, b) += w;
    n(a, b) -= w;
    n(b, a) -= w;
  }
  return n;
}

Eigen::VectorXd weighted_scores(const ComparisonGraph& graph, const EdgeWeights& weights) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(graph.item_count()));
  for (const auto& [key, stats] : graph.edges()) {
    const double ws = weights.at(key) * stats.sum;
    s[static_cast<Eigen::Index>(key.i)] += ws;
    s[static_cast<Eigen::Index>(key.j)] -= ws;
  }
  return s;
}

std::vector<std::vector<ItemIndex>> connected_components(const ComparisonGraph& graph) {
  detail::UnionFind uf(graph.item_count());
  for (const auto& [key, stats] : graph.edges()) {
    if (stats.count > 0) uf.unite(key.i, key.j);
  }
  return uf.groups();
}

bool is_connected(const ComparisonGraph& graph) {
  return connected_components(graph).size() == 1;
}

BottleneckTree bottleneck_m(const ComparisonGraph& graph) {
  std::vector<std::pair<EdgeKey, std::size_t>> by_count;
  by_count.reserve(graph.edges().size());
  for (const auto& [key, stats] : graph.edges()) {
    if (stats.count > 0) by_count.emplace_back(key, stats.count);
  }
  // Kruskal on descending counts; ties broken by edge order for determinism.
  std::stable_sort(by_count.begin(), by_count.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  detail::UnionFind uf(graph.item_count());
  BottleneckTree out;
  out.m = 0;
  for (const auto& [key, c] : by_count) {
    if (uf.unite(key.i, key.j)) {
      out.tree.push_back(key);
      out.m = c;  // counts are non-increasing, so the last accepted edge is the minimum
    }
  }
  if (out.tree.size() + 1 != graph.item_count()) {
    throw IdentifiabilityError("comparison graph is disconnected", connected_components(graph));
  }
  return out;
}

}  // namespace graphrank
