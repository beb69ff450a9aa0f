#include <cmath>
#include <random>
#include <string>

#include "graphrank/errors.hpp"
#include "graphrank/simulation.hpp"

namespace graphrank {
namespace {

constexpr std::pair<TopologyKind, const char*> kNames[] = {
    {TopologyKind::complete, "complete"},     {TopologyKind::cycle, "cycle"},
    {TopologyKind::path, "path"},             {TopologyKind::star, "star"},
    {TopologyKind::wheel, "wheel"},           {TopologyKind::tournament, "tournament"},
    {TopologyKind::erdos_renyi, "erdos_renyi"},
};

bool is_power_of_two(std::size_t k) { return k >= 2 && (k & (k - 1)) == 0; }

}  // namespace

TopologyKind topology_from_name(const std::string& name) {
  for (const auto& [kind, n] : kNames) {
    if (name == n) return kind;
  }
  throw ConfigError("topology", "unknown topology '" + name + "'");
}

std::string topology_name(TopologyKind kind) {
  for (const auto& [k, n] : kNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

Eigen::MatrixXd Topology::laplacian() const {
  const auto k = static_cast<Eigen::Index>(item_count);
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(k, k);
  for (const EdgeKey& e : edges) {
    const auto a = static_cast<Eigen::Index>(e.i);
    const auto b = static_cast<Eigen::Index>(e.j);
    n(a, a) += weight;
    n(b, b) += weight;
    n(a, b) -= weight;
    n(b, a) -= weight;
  }
  return n;
}

Topology generate_topology(const TopologySpec& spec, Rng& rng) {
  const std::size_t k = spec.item_count;
  if (k < 2) throw ConfigError("K", "a topology needs at least two items");
  if (spec.multiplicity == 0) throw ConfigError("m", "multiplicity must be positive");
  Topology t;
  t.item_count = k;
  auto& e = t.edges;
  switch (spec.kind) {
    case TopologyKind::complete:
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) e.push_back({i, j});
      break;
    case TopologyKind::path:
      for (std::size_t i = 0; i + 1 < k; ++i) e.push_back({i, i + 1});
      break;
    case TopologyKind::cycle:
      for (std::size_t i = 0; i + 1 < k; ++i) e.push_back({i, i + 1});
      if (k > 2) e.push_back({0, k - 1});
      break;
    case TopologyKind::star:
      for (std::size_t j = 1; j < k; ++j) e.push_back({0, j});
      break;
    case TopologyKind::wheel:
      for (std::size_t j = 1; j < k; ++j) e.push_back({0, j});
      for (std::size_t j = 1; j + 1 < k; ++j) e.push_back({j, j + 1});
      if (k > 3) e.push_back({1, k - 1});
      break;
    case TopologyKind::tournament: {
      if (!is_power_of_two(k)) {
        throw ConfigError("K", "a tournament needs a power-of-two item count, got " + std::to_string(k));
      }
      std::vector<std::size_t> alive(k);
      for (std::size_t i = 0; i < k; ++i) alive[i] = i;
      while (alive.size() > 1) {
        std::vector<std::size_t> next;
        for (std::size_t a = 0; a + 1 < alive.size(); a += 2) {
          e.push_back({alive[a], alive[a + 1]});
          next.push_back(alive[a]);
        }
        alive = std::move(next);
      }
      break;
    }
    case TopologyKind::erdos_renyi: {
      const double p = spec.edge_probability;
      if (!(p > 0.0 && p <= 1.0)) {
        throw ConfigError("edge_probability", "must lie in (0, 1], got " + std::to_string(p));
      }
      std::bernoulli_distribution coin(p);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
          if (coin(rng)) e.push_back({i, j});
      break;
    }
  }
  t.weight = static_cast<double>(spec.multiplicity);
  if (spec.scale_to_complete && !e.empty()) {
    t.weight *= static_cast<double>(k * (k - 1) / 2) / static_cast<double>(e.size());
  }
  return t;
}

ErrorLaw ErrorLaw::normal(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma", "must be positive");
  return ErrorLaw(Kind::normal, sigma);
}

ErrorLaw ErrorLaw::named(const std::string& name, double sigma) {
  if (name == "normal") return normal(sigma);
  if (name == "t2") return t2();
  if (name == "t3_scaled") return t3_scaled();
  throw ConfigError("error", "unknown error law '" + name + "' (normal, t2, t3_scaled)");
}

std::string ErrorLaw::name() const {
  switch (kind_) {
    case Kind::normal: return "normal";
    case Kind::t2: return "t2";
    case Kind::t3_scaled: return "t3_scaled";
  }
  return "unknown";
}

double ErrorLaw::draw(Rng& rng) const {
  switch (kind_) {
    case Kind::normal: return std::normal_distribution<double>(0.0, sigma_)(rng);
    case Kind::t2: return std::student_t_distribution<double>(2.0)(rng);
    case Kind::t3_scaled: return std::student_t_distribution<double>(3.0)(rng) / std::sqrt(3.0);
  }
  return 0.0;
}

}  // namespace graphrank
