#include "graphrank/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "graphrank/covariate_model.hpp"
#include "graphrank/errors.hpp"
#include "graphrank/parallel.hpp"

namespace graphrank {
namespace {

void require_variance(const MeritFit& fit, const char* test) {
  if (fit.perfect_fit || !(fit.sigma2_hat > 0.0)) {
    throw DegenerateFitError(std::string(test) + ": residual variance is zero");
  }
}

double chi_square_sf(double statistic, double df) {
  if (statistic <= 0.0) return 1.0;
  const boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

TestResult finish(std::string name, double statistic, NullLaw null, double p, double alpha) {
  TestResult r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.null = null;
  r.p_value = std::clamp(p, 0.0, 1.0);
  r.alpha = alpha;
  r.reject = r.p_value < alpha;
  return r;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
}

std::vector<Eigen::Index> checked_subset(std::span<const ItemIndex> subset, std::size_t k) {
  std::vector<Eigen::Index> idx;
  for (ItemIndex i : subset) {
    if (i >= k) throw DataError("subset item " + std::to_string(i) + " out of range");
    idx.push_back(static_cast<Eigen::Index>(i));
  }
  std::vector<Eigen::Index> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DataError("subset lists an item twice");
  }
  if (idx.size() < 2) throw DataError("subset needs at least two items");
  return idx;
}

Eigen::VectorXd sum_zero(const Eigen::VectorXd& mu) {
  return mu.array() - mu.mean();
}

// Square root of sigma2 * n * N+ via its eigendecomposition: draws
// L z, z ~ N(0, I), have the null covariance of sqrt(n) (mu_hat - mu).
Eigen::MatrixXd null_factor(const MeritFit& fit) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.n_pinv);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const double scale = fit.sigma2_hat * static_cast<double>(fit.n);
  return es.eigenvectors() * (scale * lam).cwiseSqrt().asDiagonal();
}

template <class Statistic>
double monte_carlo_p(const MeritFit& fit, double observed, const MonteCarloOptions& mc,
                     std::uint64_t test_id, Statistic&& stat) {
  if (mc.draws == 0) throw DataError("Monte-Carlo size must be positive");
  const Eigen::MatrixXd l = null_factor(fit);
  const Eigen::Index k = l.rows();
  std::vector<char> exceed(mc.draws, 0);
  parallel_for(mc.draws, mc.threads, [&](std::size_t b) {
    Rng rng = make_stream(mc.seed, {test_id, b});
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(k);
    for (Eigen::Index a = 0; a < k; ++a) z[a] = normal(rng);
    exceed[b] = stat(Eigen::VectorXd(l * z)) >= observed ? 1 : 0;
  });
  const auto count = static_cast<double>(std::count(exceed.begin(), exceed.end(), 1));
  return (1.0 + count) / (static_cast<double>(mc.draws) + 1.0);
}

double min_squared_gap(const Eigen::VectorXd& w) {
  // The smallest pairwise gap is between neighbours in sorted order.
  std::vector<double> v(w.data(), w.data() + w.size());
  std::sort(v.begin(), v.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 1; a < v.size(); ++a) best = std::min(best, (v[a] - v[a - 1]) * (v[a] - v[a - 1]));
  return best;
}

double gap_to_worst(const Eigen::VectorXd& w, Eigen::Index item) {
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (j != item) worst = std::min(worst, w[j]);
  }
  return w[item] - worst;
}

}  // namespace

TestResult test_all_equal(const MeritFit& fit, const ComparisonGraph& graph,
                          std::span<const ItemIndex> subset, double alpha) {
  check_alpha(alpha);
  require_variance(fit, "all_equal");
  const std::size_t k = graph.item_count();
  const Eigen::VectorXd mu = sum_zero(fit.mu_hat);
  NullLaw null;
  double stat = 0.0;
  if (subset.empty() || subset.size() == k) {
    if (!subset.empty()) checked_subset(subset, k);
    stat = mu.dot(laplacian(graph) * mu) / fit.sigma2_hat;
    null.df = static_cast<double>(k - 1);
  } else {
    const auto idx = checked_subset(subset, k);
    const auto r = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd mu_r(r);
    Eigen::MatrixXd block(r, r);
    for (Eigen::Index a = 0; a < r; ++a) {
      mu_r[a] = mu[idx[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < r; ++b) {
        block(a, b) = fit.n_pinv(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
    }
    stat = mu_r.dot(block.ldlt().solve(mu_r)) / fit.sigma2_hat;
    null.df = static_cast<double>(r);
  }
  return finish("all_equal", stat, null, chi_square_sf(stat, null.df), alpha);
}

TestResult test_contrasts(const MeritFit& fit, const ComparisonGraph& graph,
                          std::span<const ItemIndex> subset, double alpha) {
  check_alpha(alpha);
  const std::size_t k = graph.item_count();
  const auto idx = checked_subset(subset, k);
  require_variance(fit, "contrasts");
  const auto r = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(r - 1, static_cast<Eigen::Index>(k));
  for (Eigen::Index a = 0; a + 1 < r; ++a) {
    c(a, idx[static_cast<std::size_t>(a)]) = 1.0;
    c(a, idx[static_cast<std::size_t>(a + 1)]) = -1.0;
  }
  const Eigen::VectorXd d = c * fit.mu_hat;
  const Eigen::MatrixXd v = c * fit.n_pinv * c.transpose();
  const double stat = d.dot(v.ldlt().solve(d)) / fit.sigma2_hat;
  NullLaw null;
  null.df = static_cast<double>(r - 1);
  return finish("contrasts", stat, null, chi_square_sf(stat, null.df), alpha);
}

TestResult test_all_distinct(const MeritFit& fit, const ComparisonGraph& graph, double alpha,
                             const MonteCarloOptions& mc) {
  check_alpha(alpha);
  if (graph.item_count() < 2) throw DataError("all_distinct needs at least two items");
  require_variance(fit, "all_distinct");
  const double stat = static_cast<double>(fit.n) * min_squared_gap(fit.mu_hat);
  NullLaw null{NullLaw::Kind::monte_carlo, 0.0, mc.draws};
  const double p = monte_carlo_p(fit, stat, mc, 3, [](const Eigen::VectorXd& w) { return min_squared_gap(w); });
  return finish("all_distinct", stat, null, p, alpha);
}

TestResult test_item_not_worst(const MeritFit& fit, const ComparisonGraph& graph, ItemIndex item,
                               double alpha, const MonteCarloOptions& mc) {
  check_alpha(alpha);
  if (item >= graph.item_count()) throw DataError("item " + std::to_string(item) + " out of range");
  require_variance(fit, "item_not_worst");
  const auto it = static_cast<Eigen::Index>(item);
  const double stat = std::sqrt(static_cast<double>(fit.n)) * gap_to_worst(fit.mu_hat, it);
  NullLaw null{NullLaw::Kind::monte_carlo, 0.0, mc.draws};
  const double p = monte_carlo_p(fit, stat, mc, 4, [it](const Eigen::VectorXd& w) { return gap_to_worst(w, it); });
  return finish("item_not_worst", stat, null, p, alpha);
}

Eigen::MatrixXd pairwise_contrasts(std::size_t k) {
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(kk * (kk - 1) / 2, kk);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < kk; ++i) {
    for (Eigen::Index j = i + 1; j < kk; ++j, ++row) {
      d(row, i) = 1.0;
      d(row, j) = -1.0;
    }
  }
  return d;
}

Eigen::MatrixXd contrasts_against(std::size_t k, ItemIndex item) {
  if (item >= k) throw DataError("item out of range");
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(kk - 1, kk);
  Eigen::Index row = 0;
  for (Eigen::Index j = 0; j < kk; ++j) {
    if (j == static_cast<Eigen::Index>(item)) continue;
    e(row, static_cast<Eigen::Index>(item)) = 1.0;
    e(row, j) = -1.0;
    ++row;
  }
  return e;
}

std::size_t rank_distance(const RankVector& r1, const RankVector& r2, RankMetric metric) {
  const std::size_t k = r1.r.size();
  if (r2.r.size() != k) throw DataError("rank vectors differ in length");
  if (r1.has_ties() || r2.has_ties()) throw DataError("rank distance needs tie-free rankings");
  std::vector<std::size_t> inv1(k + 1, 0);
  for (std::size_t a = 0; a < k; ++a) {
    for (int v : {r1.r[a], r2.r[a]}) {
      if (v < 1 || static_cast<std::size_t>(v) > k) throw DataError("rank vector is not a permutation of 1..K");
    }
    inv1[static_cast<std::size_t>(r1.r[a])] = a;
  }
  if (metric == RankMetric::kendall) {
    std::size_t count = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if ((r1.r[a] < r1.r[b]) != (r2.r[a] < r2.r[b])) ++count;
      }
    }
    return count;
  }
  // sigma(v) = r2(r1^-1(v)) on positions 1..K; Cayley = K - #cycles.
  std::vector<char> seen(k + 1, 0);
  std::size_t cycles = 0;
  for (std::size_t v = 1; v <= k; ++v) {
    if (seen[v]) continue;
    ++cycles;
    for (std::size_t w = v; !seen[w]; w = static_cast<std::size_t>(r2.r[inv1[w]])) seen[w] = 1;
  }
  return k - cycles;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

RankVector refit_ranks(std::span<const ComparisonRecord> records, std::size_t k, bool covariates) {
  if (covariates) {
    return fit_with_covariates(build_design(records, k)).rank;
  }
  FitOptions opts;
  opts.diagnostics = false;
  std::vector<ComparisonRecord> plain(records.begin(), records.end());
  for (auto& r : plain) r.x.clear();
  return fit(build_graph(plain, k), Constraint::sum_zero(), opts).rank;
}

}  // namespace

BootstrapReport bootstrap_ranks(std::span<const ComparisonRecord> records, std::size_t item_count,
                                const BootstrapOptions& options) {
  if (records.empty()) throw DataError("no comparisons to resample");
  if (options.replicates == 0) throw DataError("bootstrap needs at least one replicate");
  BootstrapReport rep;
  rep.requested = options.replicates;
  rep.seed = options.seed;
  rep.point_ranks = refit_ranks(records, item_count, options.with_covariates);

  const std::size_t n = records.size();
  std::vector<std::optional<RankVector>> slots(options.replicates);
  parallel_for(options.replicates, options.threads, [&](std::size_t b) {
    Rng rng = make_stream(options.seed, {0xB0, b});
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<ComparisonRecord> sample;
    sample.reserve(n);
    for (std::size_t a = 0; a < n; ++a) sample.push_back(records[pick(rng)]);
    try {
      slots[b] = refit_ranks(sample, item_count, options.with_covariates);
    } catch (const IdentifiabilityError&) {
      // infeasible resample; counted below
    }
  });

  for (auto& s : slots) {
    if (s) rep.rank_samples.push_back(std::move(*s));
    else ++rep.skipped;
  }
  if (2 * rep.skipped > rep.requested) {
    throw IdentifiabilityError("bootstrap: " + std::to_string(rep.skipped) + " of " +
                               std::to_string(rep.requested) + " resamples were infeasible");
  }
  for (std::size_t i = 0; i < item_count; ++i) {
    std::vector<double> col;
    col.reserve(rep.rank_samples.size());
    for (const RankVector& r : rep.rank_samples) col.push_back(r.r[i]);
    rep.quartiles.push_back({quantile(col, 0.25), quantile(col, 0.5), quantile(col, 0.75)});
  }
  return rep;
}

}  // namespace graphrank
