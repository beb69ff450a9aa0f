#include "graphrank/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "graphrank/covariate_model.hpp"
#include "graphrank/errors.hpp"
#include "graphrank/estimator.hpp"
#include "graphrank/inference.hpp"
#include "graphrank/parallel.hpp"
#include "graphrank/spectral.hpp"

namespace graphrank {
namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string gamma_label(double g) { return "gamma=" + format_double(g); }

ComparisonGraph simulate_graph(const Topology& topo, std::size_t m, const Eigen::VectorXd& mu,
                               const std::vector<double>& noise) {
  GraphBuilder b(topo.item_count);
  std::size_t at = 0;
  for (const EdgeKey& e : topo.edges) {
    const double d = mu[static_cast<Eigen::Index>(e.i)] - mu[static_cast<Eigen::Index>(e.j)];
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double y = d + noise[at++];
      sum += y;
      sum_sq += y * y;
    }
    b.add_aggregate(e.i, e.j, m, sum, sum_sq);
  }
  return std::move(b).build();
}

struct Outcome {
  double norm = 0.0;
  bool correct = false;
};

Outcome score(const Eigen::VectorXd& mu_hat, const Eigen::VectorXd& mu, const RankVector& truth) {
  const Eigen::VectorXd centered = mu_hat.array() - mu_hat.mean();
  return {(centered - mu).norm(), ranks(mu_hat) == truth};
}

void summarize(SimulationReport& rep, const std::string& series, double x,
               const std::vector<Outcome>& outs) {
  const auto r = outs.size();
  std::vector<double> norms;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t correct = 0;
  for (const Outcome& o : outs) {
    norms.push_back(o.norm);
    sum += o.norm;
    sum_sq += o.norm * o.norm;
    correct += o.correct ? 1 : 0;
  }
  const double rr = static_cast<double>(r);
  rep.rows.push_back({series, x, "mse", sum / rr, r});
  rep.rows.push_back({series, x, "mean_sq_norm", sum_sq / rr, r});
  rep.rows.push_back({series, x, "median_norm", quantile(norms, 0.5), r});
  rep.rows.push_back({series, x, "p_correct_rank", static_cast<double>(correct) / rr, r});
}

}  // namespace

void SimulationReport::write_csv(std::ostream& out) const {
  out << "series,x,metric,estimate,replicates\n";
  for (const SeriesRow& row : rows) {
    out << row.series << ',' << format_double(row.x) << ',' << row.metric << ','
        << format_double(row.estimate) << ',' << row.replicates << '\n';
  }
}

json SimulationReport::provenance() const {
  json j;
  j["schema"] = "graph-rank/1";
  j["campaign"] = campaign;
  j["seed"] = seed;
  j["config"] = config;
  j["counters"] = counters;
  j["warnings"] = warnings;
  return j;
}

double SimulationReport::value(const std::string& series, double x, const std::string& metric) const {
  for (const SeriesRow& row : rows) {
    if (row.series == series && row.x == x && row.metric == metric) return row.estimate;
  }
  throw DataError("no simulation row for " + series + " / " + format_double(x) + " / " + metric);
}

SimulationReport precision_profile(const std::vector<TopologyKind>& kinds,
                                   const std::vector<std::size_t>& item_counts, bool scale) {
  SimulationReport rep;
  rep.campaign = "precision";
  json names = json::array();
  for (TopologyKind kind : kinds) {
    if (kind == TopologyKind::erdos_renyi) {
      throw ConfigError("topologies", "erdos_renyi is random; the precision profile needs fixed graphs");
    }
    names.push_back(topology_name(kind));
  }
  rep.config = {{"campaign", "precision"}, {"topologies", names}, {"K", item_counts},
                {"scale_to_complete", scale}};
  Rng unused = make_stream(0, {});
  for (TopologyKind kind : kinds) {
    for (std::size_t k : item_counts) {
      const Topology t = generate_topology({kind, k, 1, 1.0, scale}, unused);
      const SpectralSummary s = spectral_summary(t.laplacian());
      if (!s.connected) throw ConfigError("topologies", topology_name(kind) + " is disconnected");
      const double x = static_cast<double>(k);
      rep.rows.push_back({topology_name(kind), x, "pinv_trace", s.pinv_trace, 1});
      rep.rows.push_back({topology_name(kind), x, "pinv_max_eigenvalue", s.pinv_max_eigenvalue, 1});
    }
  }
  return rep;
}

SimulationReport run_consistency_campaign(const ConsistencyConfig& cfg) {
  const auto k = static_cast<std::size_t>(cfg.mu0.size());
  if (k < 2) throw ConfigError("mu0", "needs at least two merits");
  if (cfg.m_grid.empty()) throw ConfigError("m_grid", "must not be empty");
  if (cfg.gammas.empty()) throw ConfigError("gammas", "must not be empty");
  if (cfg.errors.empty()) throw ConfigError("errors", "must not be empty");
  if (cfg.replicates == 0) throw ConfigError("replicates", "must be positive");
  for (std::size_t m : cfg.m_grid) {
    if (m == 0) throw ConfigError("m_grid", "multiplicities must be positive");
  }
  Eigen::VectorXd beta;
  if (cfg.covariates) {
    if (cfg.covariates->dimension == 0) throw ConfigError("covariates.dimension", "must be positive");
    beta = cfg.covariates->beta.size() ? cfg.covariates->beta
                                       : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.covariates->dimension));
    if (static_cast<std::size_t>(beta.size()) != cfg.covariates->dimension) {
      throw ConfigError("covariates.beta", "length must equal covariates.dimension");
    }
  }

  SimulationReport rep;
  rep.campaign = "consistency";
  rep.seed = cfg.seed;
  if (std::abs(cfg.mu0.sum()) > 1e-12 * std::max(1.0, cfg.mu0.cwiseAbs().maxCoeff())) {
    rep.warnings.push_back("mu0 does not sum to zero; errors are measured against its centred version");
  }

  // Targets per gamma, centred to the sum-zero representation.
  std::vector<Eigen::VectorXd> targets;
  std::vector<RankVector> truth;
  for (double g : cfg.gammas) {
    Eigen::VectorXd mu = cfg.mu0 * std::pow(10.0, -g);
    mu.array() -= mu.mean();
    targets.push_back(mu);
    truth.push_back(ranks(mu));
  }

  const std::size_t models = cfg.covariates ? 2 : 1;
  const std::size_t cells_per_m = cfg.errors.size() * cfg.gammas.size() * models;
  const std::size_t r_count = cfg.replicates;
  // outcome[(m_idx * cells_per_m + cell) * R + r]
  std::vector<Outcome> outcome(cfg.m_grid.size() * cells_per_m * r_count);
  std::vector<std::size_t> redraws(cfg.m_grid.size() * r_count, 0);

  FitOptions opts;
  opts.diagnostics = false;
  parallel_for(cfg.m_grid.size() * r_count, cfg.threads, [&](std::size_t job) {
    const std::size_t mi = job / r_count;
    const std::size_t r = job % r_count;
    const std::size_t m = cfg.m_grid[mi];
    Rng rng = make_stream(cfg.seed, {mi, r});
    Topology topo;
    for (std::size_t attempt = 0;; ++attempt) {
      topo = generate_topology({cfg.topology, k, m, cfg.edge_probability, false}, rng);
      GraphBuilder probe(k);
      for (const EdgeKey& e : topo.edges) probe.add(e.i, e.j, 0.0);
      if (is_connected(std::move(probe).build())) break;
      if (attempt >= 1000) throw ConfigError("edge_probability", "graph is almost never connected");
      ++redraws[job];
    }
    const std::size_t n = topo.edges.size() * m;
    for (std::size_t li = 0; li < cfg.errors.size(); ++li) {
      std::vector<double> noise(n);
      for (double& e : noise) e = cfg.errors[li].draw(rng);
      Eigen::MatrixXd x;
      if (cfg.covariates) {
        std::bernoulli_distribution coin(0.5);
        x.resize(static_cast<Eigen::Index>(n), beta.size());
        for (Eigen::Index a = 0; a < x.rows(); ++a)
          for (Eigen::Index c = 0; c < x.cols(); ++c) x(a, c) = coin(rng) ? 1.0 : -1.0;
      }
      for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
        const Eigen::VectorXd& mu = targets[gi];
        const std::size_t cell = (li * cfg.gammas.size() + gi) * models;
        auto slot = [&](std::size_t model) -> Outcome& {
          return outcome[(mi * cells_per_m + cell + model) * r_count + r];
        };
        if (!cfg.covariates) {
          const ComparisonGraph g = simulate_graph(topo, m, mu, noise);
          slot(0) = score(fit(g, Constraint::sum_zero(), opts).mu_hat, mu, truth[gi]);
          continue;
        }
        std::vector<ComparisonRecord> records;
        records.reserve(n);
        std::size_t row = 0;
        for (const EdgeKey& e : topo.edges) {
          const double d = mu[static_cast<Eigen::Index>(e.i)] - mu[static_cast<Eigen::Index>(e.j)];
          for (std::size_t c = 0; c < m; ++c, ++row) {
            const Eigen::VectorXd xr = x.row(static_cast<Eigen::Index>(row)).transpose();
            records.push_back({e.i, e.j, d + xr.dot(beta) + noise[row],
                               std::vector<double>(xr.data(), xr.data() + xr.size())});
          }
        }
        slot(0) = score(fit_with_covariates(build_design(records, k)).mu_hat, mu, truth[gi]);
        for (auto& rec : records) rec.x.clear();
        slot(1) = score(fit(build_graph(records, k), Constraint::sum_zero(), opts).mu_hat, mu, truth[gi]);
      }
    }
  });

  for (std::size_t li = 0; li < cfg.errors.size(); ++li) {
    for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
      for (std::size_t model = 0; model < models; ++model) {
        std::string series = cfg.errors[li].name() + "/" + gamma_label(cfg.gammas[gi]);
        if (cfg.covariates) series += model == 0 ? "/with_covariates" : "/without_covariates";
        const std::size_t cell = (li * cfg.gammas.size() + gi) * models + model;
        for (std::size_t mi = 0; mi < cfg.m_grid.size(); ++mi) {
          const auto first = outcome.begin() + static_cast<std::ptrdiff_t>((mi * cells_per_m + cell) * r_count);
          summarize(rep, series, static_cast<double>(cfg.m_grid[mi]),
                    std::vector<Outcome>(first, first + static_cast<std::ptrdiff_t>(r_count)));
        }
      }
    }
  }
  std::size_t total_redraws = 0;
  for (std::size_t v : redraws) total_redraws += v;
  rep.counters["disconnected_redraws"] = total_redraws;

  json errors = json::array();
  for (const ErrorLaw& e : cfg.errors) errors.push_back(e.name());
  rep.config = {{"campaign", "consistency"},
                {"topology", topology_name(cfg.topology)},
                {"mu0", std::vector<double>(cfg.mu0.data(), cfg.mu0.data() + cfg.mu0.size())},
                {"gammas", cfg.gammas},
                {"m_grid", cfg.m_grid},
                {"errors", errors},
                {"sigma", cfg.errors.front().sigma()},
                {"replicates", cfg.replicates}};
  if (cfg.topology == TopologyKind::erdos_renyi) rep.config["edge_probability"] = cfg.edge_probability;
  if (cfg.covariates) {
    rep.config["covariates"] = {{"dimension", cfg.covariates->dimension},
                                {"beta", std::vector<double>(beta.data(), beta.data() + beta.size())},
                                {"distribution", "rademacher"}};
  }
  return rep;
}

double evaluate_p_rule(const std::string& rule, std::size_t k) {
  const double kk = static_cast<double>(k);
  const double log3 = std::pow(std::log(kk), 3.0) / kk;
  double p = 0.0;
  if (rule == "log3") {
    p = log3;
  } else if (rule == "sqrt_log3") {
    p = std::sqrt(log3);
  } else {
    const auto res = std::from_chars(rule.data(), rule.data() + rule.size(), p);
    if (res.ec != std::errc{} || res.ptr != rule.data() + rule.size()) {
      throw ConfigError("p_rules", "unknown p rule '" + rule + "'");
    }
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw ConfigError("p_rules", "rule '" + rule + "' gives p = " + format_double(p) + " at K = " +
                                     std::to_string(k) + ", outside (0, 1]");
  }
  return p;
}

SimulationReport run_sparse_campaign(const SparseConfig& cfg) {
  if (cfg.item_counts.empty()) throw ConfigError("K", "must not be empty");
  if (cfg.p_rules.empty()) throw ConfigError("p_rules", "must not be empty");
  if (cfg.replicates == 0) throw ConfigError("replicates", "must be positive");
  if (cfg.mu_rule != "spread" && cfg.mu_rule != "zero") {
    throw ConfigError("mu_rule", "unknown rule '" + cfg.mu_rule + "' (spread, zero)");
  }
  for (std::size_t k : cfg.item_counts) {
    if (k < 2) throw ConfigError("K", "item counts must be at least 2");
    for (const std::string& rule : cfg.p_rules) evaluate_p_rule(rule, k);
  }

  SimulationReport rep;
  rep.campaign = "sparse";
  rep.seed = cfg.seed;
  const std::size_t nk = cfg.item_counts.size();
  const std::size_t r_count = cfg.replicates;
  const std::size_t jobs = cfg.p_rules.size() * nk * r_count;
  std::vector<double> lse(jobs), rowsum(jobs);
  std::vector<std::size_t> redraws(jobs, 0);

  FitOptions opts;
  opts.diagnostics = false;
  parallel_for(jobs, cfg.threads, [&](std::size_t job) {
    const std::size_t pi = job / (nk * r_count);
    const std::size_t ki = (job / r_count) % nk;
    const std::size_t r = job % r_count;
    const std::size_t k = cfg.item_counts[ki];
    const double p = evaluate_p_rule(cfg.p_rules[pi], k);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    if (cfg.mu_rule == "spread") {
      for (std::size_t i = 0; i < k; ++i) mu[static_cast<Eigen::Index>(i)] = 2.0 * static_cast<double>(i) - static_cast<double>(k - 1);
    }
    Rng rng = make_stream(cfg.seed, {pi, ki, r});
    std::normal_distribution<double> normal;
    for (std::size_t attempt = 0;; ++attempt) {
      const Topology topo = generate_topology({TopologyKind::erdos_renyi, k, 1, p, false}, rng);
      GraphBuilder b(k);
      for (const EdgeKey& e : topo.edges) {
        b.add(e.i, e.j, mu[static_cast<Eigen::Index>(e.i)] - mu[static_cast<Eigen::Index>(e.j)] + normal(rng));
      }
      const ComparisonGraph g = std::move(b).build();
      if (!is_connected(g)) {
        if (attempt >= cfg.max_redraws) {
          throw ConfigError("p_rules", "rule '" + cfg.p_rules[pi] + "' almost never gives a connected graph");
        }
        ++redraws[job];
        continue;
      }
      const Eigen::VectorXd mu_hat = fit(g, Constraint::sum_zero(), opts).mu_hat;
      lse[job] = (mu_hat - mu).cwiseAbs().maxCoeff();
      rowsum[job] = (row_sum_estimate(g) - mu).cwiseAbs().maxCoeff();
      break;
    }
  });

  for (std::size_t pi = 0; pi < cfg.p_rules.size(); ++pi) {
    const std::string series = "p=" + cfg.p_rules[pi];
    for (std::size_t ki = 0; ki < nk; ++ki) {
      double a = 0.0, b = 0.0;
      for (std::size_t r = 0; r < r_count; ++r) {
        const std::size_t job = (pi * nk + ki) * r_count + r;
        a += lse[job];
        b += rowsum[job];
      }
      const double x = static_cast<double>(cfg.item_counts[ki]);
      const double rr = static_cast<double>(r_count);
      rep.rows.push_back({series, x, "lse_max_error", a / rr, r_count});
      rep.rows.push_back({series, x, "rowsum_max_error", b / rr, r_count});
      rep.rows.push_back({series, x, "edge_probability", evaluate_p_rule(cfg.p_rules[pi], cfg.item_counts[ki]), r_count});
    }
  }
  std::size_t total = 0;
  for (std::size_t v : redraws) total += v;
  rep.counters["disconnected_redraws"] = total;
  rep.config = {{"campaign", "sparse"},       {"K", cfg.item_counts},
                {"p_rules", cfg.p_rules},     {"mu_rule", cfg.mu_rule},
                {"replicates", cfg.replicates}, {"max_redraws", cfg.max_redraws}};
  return rep;
}

// ---- JSON configuration ----

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& prefix = "") {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ConfigError(prefix + item.key(), "unknown configuration key");
  }
}

template <class T>
T read(const json& j, const std::string& key, const T& fallback, const std::string& field = "") {
  const std::string name = field.empty() ? key : field;
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(name, "has the wrong type");
  }
}

template <class T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(key, "is required");
  return read<T>(j, key, T{});
}

// Either an explicit list or {"from": a, "to": b, "step": s}.
std::vector<std::size_t> read_grid(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(key, "is required");
  const json& v = j.at(key);
  if (v.is_object()) {
    reject_unknown(v, {"from", "to", "step"}, key + ".");
    const auto from = require<std::size_t>(v, "from");
    const auto to = require<std::size_t>(v, "to");
    const auto step = read<std::size_t>(v, "step", 1, key + ".step");
    if (step == 0 || to < from) throw ConfigError(key, "needs from <= to and a positive step");
    std::vector<std::size_t> out;
    for (std::size_t x = from; x <= to; x += step) out.push_back(x);
    return out;
  }
  try {
    return v.get<std::vector<std::size_t>>();
  } catch (const json::exception&) {
    throw ConfigError(key, "must be a list of positive integers or a {from, to, step} range");
  }
}

std::uint64_t resolve_seed(const json& j, std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  if (j.contains("seed")) return read<std::uint64_t>(j, "seed", 0);
  return seed_from_environment();
}

}  // namespace

SimulationReport run_campaign(const json& j, std::optional<std::uint64_t> seed,
                              std::optional<unsigned> threads) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  const auto campaign = require<std::string>(j, "campaign");
  const unsigned thread_count = threads ? *threads : read<unsigned>(j, "threads", default_thread_count());

  if (campaign == "precision") {
    reject_unknown(j, {"campaign", "topologies", "K", "scale_to_complete", "seed", "threads"});
    std::vector<TopologyKind> kinds;
    for (const auto& name : require<std::vector<std::string>>(j, "topologies")) kinds.push_back(topology_from_name(name));
    SimulationReport rep = precision_profile(kinds, read_grid(j, "K"), read<bool>(j, "scale_to_complete", true));
    rep.seed = resolve_seed(j, seed);
    return rep;
  }
  if (campaign == "consistency") {
    reject_unknown(j, {"campaign", "topology", "edge_probability", "mu0", "gammas", "m_grid", "errors",
                       "sigma", "replicates", "seed", "threads", "covariates"});
    ConsistencyConfig cfg;
    cfg.topology = topology_from_name(read<std::string>(j, "topology", "complete"));
    cfg.edge_probability = read<double>(j, "edge_probability", 1.0);
    const auto mu0 = read<std::vector<double>>(j, "mu0", {-7, -5, -3, -1, 1, 3, 5, 7});
    cfg.mu0 = Eigen::Map<const Eigen::VectorXd>(mu0.data(), static_cast<Eigen::Index>(mu0.size()));
    cfg.gammas = read<std::vector<double>>(j, "gammas", {0.0});
    cfg.m_grid = read_grid(j, "m_grid");
    const double sigma = read<double>(j, "sigma", 1.0);
    cfg.errors.clear();
    for (const auto& name : read<std::vector<std::string>>(j, "errors", {"normal"})) {
      cfg.errors.push_back(ErrorLaw::named(name, sigma));
    }
    cfg.replicates = read<std::size_t>(j, "replicates", 1000);
    cfg.seed = resolve_seed(j, seed);
    cfg.threads = thread_count;
    if (j.contains("covariates")) {
      const json& c = j.at("covariates");
      if (!c.is_object()) throw ConfigError("covariates", "must be an object");
      reject_unknown(c, {"dimension", "beta", "distribution"}, "covariates.");
      if (read<std::string>(c, "distribution", "rademacher", "covariates.distribution") != "rademacher") {
        throw ConfigError("covariates.distribution", "only 'rademacher' is supported");
      }
      CovariateSettings s;
      s.dimension = read<std::size_t>(c, "dimension", 2, "covariates.dimension");
      const auto beta = read<std::vector<double>>(c, "beta", {}, "covariates.beta");
      if (!beta.empty()) s.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
      cfg.covariates = s;
    }
    return run_consistency_campaign(cfg);
  }
  if (campaign == "sparse") {
    reject_unknown(j, {"campaign", "K", "p_rules", "mu_rule", "replicates", "seed", "threads", "max_redraws"});
    SparseConfig cfg;
    cfg.item_counts = read_grid(j, "K");
    cfg.p_rules = require<std::vector<std::string>>(j, "p_rules");
    cfg.mu_rule = read<std::string>(j, "mu_rule", "spread");
    cfg.replicates = read<std::size_t>(j, "replicates", 50);
    cfg.max_redraws = read<std::size_t>(j, "max_redraws", 1000);
    cfg.seed = resolve_seed(j, seed);
    cfg.threads = thread_count;
    return run_sparse_campaign(cfg);
  }
  throw ConfigError("campaign", "unknown campaign '" + campaign + "' (precision, consistency, sparse)");
}

}  // namespace graphrank
