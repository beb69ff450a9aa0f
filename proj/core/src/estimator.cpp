#include "graphrank/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphrank/errors.hpp"
#include "graphrank/spectral.hpp"

namespace graphrank {

Constraint Constraint::custom(Eigen::VectorXd v) {
  const double len = static_cast<double>(v.size());
  if (v.size() == 0 || std::abs(v.sum()) <= 1e-12 * v.norm() * std::sqrt(len)) {
    throw DataError("constraint vector must not be a contrast (v'1 != 0)");
  }
  return Constraint(Kind::custom, 0, std::move(v));
}

Eigen::VectorXd Constraint::vector(std::size_t k) const {
  const auto kk = static_cast<Eigen::Index>(k);
  switch (kind_) {
    case Kind::sum_zero:
      return Eigen::VectorXd::Ones(kk);
    case Kind::anchor: {
      if (anchor_ >= k) throw DataError("anchor item " + std::to_string(anchor_) + " out of range");
      Eigen::VectorXd e = Eigen::VectorXd::Zero(kk);
      e[static_cast<Eigen::Index>(anchor_)] = 1.0;
      return e;
    }
    case Kind::custom:
      if (custom_.size() != kk) throw DataError("constraint vector length does not match item count");
      return custom_;
  }
  return {};
}

Eigen::MatrixXd Constraint::projector(std::size_t k) const {
  const Eigen::VectorXd v = vector(k);
  const auto kk = static_cast<Eigen::Index>(k);
  return Eigen::MatrixXd::Identity(kk, kk) - Eigen::VectorXd::Ones(kk) * v.transpose() / v.sum();
}

bool RankVector::has_ties() const {
  std::vector<int> sorted = r;
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

RankVector ranks(const Eigen::VectorXd& mu) {
  RankVector out;
  out.r.resize(static_cast<std::size_t>(mu.size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    int count = 0;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      if (mu[i] <= mu[j]) ++count;
    }
    out.r[static_cast<std::size_t>(i)] = count;
  }
  return out;
}

double objective(const ComparisonGraph& graph, const Eigen::VectorXd& mu, const EdgeWeights* weights) {
  double q = 0.0;
  for (const auto& [key, s] : graph.edges()) {
    if (s.count == 0) continue;
    const double c = static_cast<double>(s.count);
    const double mean = s.sum / c;
    // Within-edge scatter plus the between term; avoids cancellation when the
    // fit interpolates the edge means.
    const double within = std::max(s.sum_sq - s.sum * mean, 0.0);
    const double gap = mean - (mu[static_cast<Eigen::Index>(key.i)] - mu[static_cast<Eigen::Index>(key.j)]);
    const double w = weights ? weights->at(key) : 1.0;
    q += w * (within + c * gap * gap);
  }
  return q;
}

MeritFit fit(const ComparisonGraph& graph, const Constraint& constraint, const FitOptions& options) {
  const std::size_t k = graph.item_count();
  if (graph.total_comparisons() == 0) throw DataError("no comparisons to fit");
  auto components = connected_components(graph);
  if (components.size() > 1) {
    throw IdentifiabilityError("comparison graph is disconnected: " +
                                   std::to_string(components.size()) + " components",
                               std::move(components));
  }

  MeritFit out;
  out.constraint = constraint;
  out.n = graph.total_comparisons();

  const Eigen::MatrixXd lap = laplacian(graph, options.weights);
  const Eigen::VectorXd s = options.weights ? weighted_scores(graph, *options.weights) : graph.scores();
  out.n_pinv = pinv_laplacian(lap);

  const Eigen::MatrixXd c_v = constraint.projector(k);
  out.mu_hat = c_v * (out.n_pinv * s);

  out.residual_ss = objective(graph, out.mu_hat, options.weights);
  double divisor = static_cast<double>(out.n);
  if (options.divisor == VarianceDivisor::degrees_of_freedom) {
    divisor -= static_cast<double>(k - 1);
    if (divisor <= 0.0) throw DataError("too few comparisons for the degrees-of-freedom variance");
  }
  out.sigma2_hat = out.residual_ss / divisor;
  double total_ss = 0.0;
  for (const auto& [key, st] : graph.edges()) total_ss += st.sum_sq;
  out.perfect_fit = out.residual_ss <= 1e-24 * std::max(1.0, total_ss);
  out.cov = out.sigma2_hat * c_v * out.n_pinv * c_v.transpose();
  out.rank = ranks(out.mu_hat);

  if (options.diagnostics) {
    const SpectralSummary spec = spectral_summary(lap);
    out.diagnostics.lambda2 = spec.lambda2;
    const BottleneckTree tree = bottleneck_m(graph);
    out.diagnostics.bottleneck_m = tree.m;
    out.diagnostics.bottleneck_tree = tree.tree;
    out.diagnostics.computed = true;
  }
  return out;
}

MeritFit reconstrain(const MeritFit& fit, const Constraint& u) {
  const auto k = static_cast<std::size_t>(fit.mu_hat.size());
  const Eigen::VectorXd v = fit.constraint.vector(k);
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::MatrixXd c_v_pinv = Eigen::MatrixXd::Identity(kk, kk) - v * v.transpose() / v.squaredNorm();
  const Eigen::MatrixXd map = u.projector(k) * c_v_pinv;

  MeritFit out = fit;
  out.constraint = u;
  out.mu_hat = map * fit.mu_hat;
  out.cov = map * fit.cov * map.transpose();
  out.rank = ranks(out.mu_hat);
  return out;
}

double pairwise_difference_variance(const MeritFit& fit, ItemIndex i, ItemIndex j) {
  if (i == j) throw DataError("pairwise difference variance needs two distinct items");
  const auto k = static_cast<std::size_t>(fit.n_pinv.rows());
  if (i >= k || j >= k) throw DataError("item index out of range");
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  const Eigen::MatrixXd& p = fit.n_pinv;
  return fit.sigma2_hat * (p(a, a) + p(b, b) - 2.0 * p(a, b));
}

Eigen::VectorXd row_sum_estimate(const ComparisonGraph& graph) {
  const Eigen::VectorXd deg = graph.degrees();
  const Eigen::VectorXd s = graph.scores();
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    if (deg[i] == 0.0) throw DataError("row-sum estimate undefined: item " + graph.label(static_cast<std::size_t>(i)) + " is isolated");
  }
  return s.cwiseQuotient(deg);
}

}  // namespace graphrank
