#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "game_table.hpp"
#include "graphrank/covariate_model.hpp"
#include "graphrank/errors.hpp"
#include "graphrank/estimator.hpp"
#include "graphrank/inference.hpp"
#include "graphrank/parallel.hpp"
#include "graphrank/random.hpp"
#include "graphrank/simulation.hpp"
#include "graphrank/spectral.hpp"

namespace graphrank::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kSchema = "graph-rank/1";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

// Records in table order with the chosen covariates attached.
struct ModelData {
  GameTable table;
  std::vector<ComparisonRecord> records;
  std::vector<std::string> covariate_names;
  std::string psi = "diff";

  std::size_t covariate_count() const { return covariate_names.size(); }
};

ModelData prepare(GameTable table, const std::string& covariates, const std::string& psi_name,
                  bool no_covariates) {
  ModelData d;
  d.psi = psi_name;
  const Psi psi = Psi::named(psi_name);
  if (no_covariates && !covariates.empty()) {
    throw ConfigError("covariates", "--covariates and --no-covariates are mutually exclusive");
  }
  std::vector<std::size_t> combined;
  std::vector<std::pair<std::size_t, std::size_t>> sided;
  if (!no_covariates) {
    if (covariates.empty()) {
      for (std::size_t c = 0; c < table.covariate_columns.size(); ++c) {
        combined.push_back(c);
        d.covariate_names.push_back(table.covariate_columns[c]);
      }
    } else {
      for (const std::string& spec : split(covariates, ',')) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos) {
          combined.push_back(table.column_of(spec));
        } else {
          sided.emplace_back(table.column_of(spec.substr(0, colon)), table.column_of(spec.substr(colon + 1)));
        }
        d.covariate_names.push_back(spec);
      }
      if (!combined.empty() && !sided.empty()) {
        throw ConfigError("covariates", "mix of combined columns and per-side a:b pairs");
      }
    }
  }
  for (const GameTable::Row& row : table.rows) {
    if (!sided.empty()) {
      SidedComparison s{row.i, row.j, row.y, {}, {}};
      for (const auto& [a, b] : sided) {
        s.xi.push_back(row.extra[a]);
        s.xj.push_back(row.extra[b]);
      }
      d.records.push_back(combine(s, psi));
    } else {
      ComparisonRecord r{row.i, row.j, row.y, {}};
      for (std::size_t c : combined) r.x.push_back(row.extra[c]);
      d.records.push_back(std::move(r));
    }
  }
  d.table = std::move(table);
  return d;
}

ComparisonGraph plain_graph(const ModelData& d) {
  GraphBuilder b(d.table.item_count());
  for (const ComparisonRecord& r : d.records) b.add(r.i, r.j, r.y);
  b.labels(d.table.labels);
  return std::move(b).build();
}

Constraint parse_constraint(const std::string& spec, const GameTable& table) {
  if (spec.empty() || spec == "sum") return Constraint::sum_zero();
  if (spec.rfind("anchor=", 0) == 0) return Constraint::anchor(table.index_of(spec.substr(7)));
  if (spec.rfind("file=", 0) == 0) {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open constraint file '" + path + "'");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.item_count()));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto f = split_csv_line(line);
      if (f.size() != 2) throw DataError(path + ":" + std::to_string(lineno) + ": expected label,value");
      try {
        v[static_cast<Eigen::Index>(table.index_of(f[0]))] = std::stod(f[1]);
      } catch (const std::logic_error&) {
        throw DataError(path + ":" + std::to_string(lineno) + ": '" + f[1] + "' is not a number");
      }
    }
    return Constraint::custom(v);
  }
  throw ConfigError("constraint", "expected sum, anchor=<label> or file=<path>, got '" + spec + "'");
}

EdgeWeights read_weights(const std::string& path, const GameTable& table) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights file '" + path + "'");
  EdgeWeights w;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 3) throw DataError(where + ": expected label,label,weight");
    double value = 0.0;
    try {
      value = std::stod(f[2]);
    } catch (const std::logic_error&) {
      throw DataError(where + ": '" + f[2] + "' is not a number");
    }
    try {
      w.set(table.index_of(f[0]), table.index_of(f[1]), value);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return w;
}

json constraint_json(const Constraint& c, const GameTable& table) {
  switch (c.kind()) {
    case Constraint::Kind::sum_zero: return {{"kind", "sum_zero"}};
    case Constraint::Kind::anchor: return {{"kind", "anchor"}, {"item", table.labels[c.anchor_item()]}};
    case Constraint::Kind::custom: {
      const Eigen::VectorXd v = c.vector(table.item_count());
      return {{"kind", "custom"}, {"v", std::vector<double>(v.data(), v.data() + v.size())}};
    }
  }
  return {};
}

// Re-raises with labels and covariate names spelled out.
[[noreturn]] void explain(const IdentifiabilityError& e, const ModelData& d) {
  std::string msg = e.what();
  if (!e.components().empty()) {
    msg += "; components:";
    for (const auto& comp : e.components()) {
      msg += " {";
      for (std::size_t a = 0; a < comp.size(); ++a) msg += (a ? "," : "") + d.table.labels[comp[a]];
      msg += "}";
    }
  }
  for (const auto& dir : e.directions()) {
    msg += "; offending direction:";
    for (std::size_t c = 0; c < dir.size(); ++c) {
      std::ostringstream coef;
      coef << dir[c];
      msg += " " + (c < d.covariate_names.size() ? d.covariate_names[c] : std::to_string(c)) + "=" + coef.str();
    }
  }
  throw IdentifiabilityError(msg, e.components(), e.directions());
}

json item_block(const GameTable& table, const Eigen::VectorXd& mu, const RankVector& r) {
  json items = json::array();
  for (std::size_t i = 0; i < table.item_count(); ++i) {
    items.push_back({{"label", table.labels[i]}, {"merit", mu[static_cast<Eigen::Index>(i)]}, {"rank", r.r[i]}});
  }
  return items;
}

json pairwise_block(const GameTable& table, const Eigen::MatrixXd& mu_cov) {
  json out = json::array();
  const auto k = static_cast<Eigen::Index>(table.item_count());
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const double var = mu_cov(a, a) + mu_cov(b, b) - 2.0 * mu_cov(a, b);
      out.push_back({{"i", table.labels[static_cast<std::size_t>(a)]},
                     {"j", table.labels[static_cast<std::size_t>(b)]},
                     {"se", std::sqrt(std::max(var, 0.0))}});
    }
  }
  return out;
}

struct FitFlags {
  std::string constraint = "sum";
  std::string covariates;
  std::string psi = "diff";
  std::string weights;
  bool center = false;
  bool no_covariates = false;
  std::string divisor = "n";
  std::string output;
};

VarianceDivisor parse_divisor(const std::string& s) {
  if (s == "n") return VarianceDivisor::total_comparisons;
  if (s == "dof") return VarianceDivisor::degrees_of_freedom;
  throw ConfigError("variance-divisor", "expected n or dof, got '" + s + "'");
}

json cmd_fit(const std::string& path, const FitFlags& f) {
  ModelData d = prepare(read_game_table_file(path), f.covariates, f.psi, f.no_covariates);
  const GameTable& t = d.table;
  const Constraint constraint = parse_constraint(f.constraint, t);
  const VarianceDivisor divisor = parse_divisor(f.divisor);
  json out = {{"schema", kSchema}, {"command", "fit"}, {"input", path}};
  out["K"] = t.item_count();
  out["n"] = d.records.size();
  out["constraint"] = constraint_json(constraint, t);

  try {
    if (d.covariate_count() == 0) {
      if (f.center) throw ConfigError("center-covariates", "no covariates to centre");
      const ComparisonGraph g = plain_graph(d);
      std::optional<EdgeWeights> weights;
      if (!f.weights.empty()) weights = read_weights(f.weights, t);
      FitOptions opts;
      opts.weights = weights ? &*weights : nullptr;
      opts.divisor = divisor;
      const MeritFit m = fit(g, constraint, opts);
      out["model"] = "merits";
      out["items"] = item_block(t, m.mu_hat, m.rank);
      out["sigma2"] = m.sigma2_hat;
      out["residual_ss"] = m.residual_ss;
      out["pairwise_se"] = pairwise_block(t, m.sigma2_hat * m.n_pinv);
      json tree = json::array();
      for (const EdgeKey& e : m.diagnostics.bottleneck_tree) tree.push_back({t.labels[e.i], t.labels[e.j]});
      out["diagnostics"] = {{"connected", true},
                            {"lambda2", m.diagnostics.lambda2},
                            {"bottleneck_m", m.diagnostics.bottleneck_m},
                            {"bottleneck_tree", tree}};
      if (weights) out["weighted"] = true;
      return out;
    }

    if (!f.weights.empty()) throw ConfigError("weights", "edge weights are not supported with covariates");
    CovariateDesign design = build_design(d.records, t.item_count());
    design.psi_name = d.psi;
    if (f.center) design = center_covariates(std::move(design));
    const CovariateFit cf = fit_with_covariates(design, constraint, divisor);
    const auto k = static_cast<Eigen::Index>(t.item_count());
    out["model"] = "merits_with_covariates";
    out["items"] = item_block(t, cf.mu_hat, cf.rank);
    out["sigma2"] = cf.sigma2_hat;
    out["residual_ss"] = cf.residual_ss;
    out["pairwise_se"] = pairwise_block(t, cf.cov.topLeftCorner(k, k));
    const ComparisonGraph g = plain_graph(d);
    const BottleneckTree bt = bottleneck_m(g);
    json tree = json::array();
    for (const EdgeKey& e : bt.tree) tree.push_back({t.labels[e.i], t.labels[e.j]});
    out["diagnostics"] = {{"connected", true},
                          {"lambda2", spectral_summary(design.laplacian()).lambda2},
                          {"bottleneck_m", bt.m},
                          {"bottleneck_tree", tree}};
    const Eigen::VectorXd bias = misspecification_bias(design, cf.beta_hat);
    json beta = json::object();
    json bias_items = json::array();
    for (std::size_t c = 0; c < d.covariate_count(); ++c) beta[d.covariate_names[c]] = cf.beta_hat[static_cast<Eigen::Index>(c)];
    for (std::size_t i = 0; i < t.item_count(); ++i) {
      bias_items.push_back({{"label", t.labels[i]}, {"bias", bias[static_cast<Eigen::Index>(i)]}});
    }
    const auto p = static_cast<Eigen::Index>(d.covariate_count());
    json beta_se = json::object();
    for (Eigen::Index c = 0; c < p; ++c) {
      beta_se[d.covariate_names[static_cast<std::size_t>(c)]] = std::sqrt(std::max(cf.cov(k + c, k + c), 0.0));
    }
    out["covariates"] = {{"names", d.covariate_names},
                         {"psi", d.psi},
                         {"centered", f.center},
                         {"beta", beta},
                         {"beta_se", beta_se},
                         {"angle_phi", cf.angle_phi.value_or(0.0)},
                         {"identifiability",
                          {{"rank_m", cf.identifiability.rank_m},
                           {"rank_residual_x", cf.identifiability.rank_residual_x},
                           {"identifiable", cf.identifiability.identifiable}}},
                         {"misspecification_bias", bias_items}};
    return out;
  } catch (const IdentifiabilityError& e) {
    explain(e, d);
  }
}

struct TestFlags {
  std::string test;
  double alpha = 0.05;
  std::string subset;
  std::string item;
  std::size_t mc_b = kDefaultMonteCarloDraws;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string constraint = "sum";
};

json cmd_test(const std::string& path, const TestFlags& f) {
  ModelData d = prepare(read_game_table_file(path), "", "diff", true);
  const GameTable& t = d.table;
  std::vector<ItemIndex> subset;
  for (const std::string& label : split(f.subset, ',')) subset.push_back(t.index_of(label));
  const std::uint64_t seed = f.seed ? *f.seed : seed_from_environment();
  MonteCarloOptions mc{f.mc_b, seed, f.threads ? *f.threads : default_thread_count()};

  const ComparisonGraph g = plain_graph(d);
  MeritFit m;
  try {
    m = fit(g, parse_constraint(f.constraint, t));
  } catch (const IdentifiabilityError& e) {
    explain(e, d);
  }
  TestResult r;
  json extra = json::object();
  if (f.test == "all_equal") {
    r = test_all_equal(m, g, subset, f.alpha);
  } else if (f.test == "contrasts") {
    if (subset.empty()) {
      for (std::size_t i = 0; i < t.item_count(); ++i) subset.push_back(i);
    }
    r = test_contrasts(m, g, subset, f.alpha);
  } else if (f.test == "all_distinct") {
    r = test_all_distinct(m, g, f.alpha, mc);
  } else if (f.test == "item_not_worst") {
    if (f.item.empty()) throw ConfigError("item", "item_not_worst needs --item <label>");
    r = test_item_not_worst(m, g, t.index_of(f.item), f.alpha, mc);
    extra["item"] = f.item;
  } else {
    throw ConfigError("test", "unknown test '" + f.test + "' (all_equal, contrasts, all_distinct, item_not_worst)");
  }
  json null;
  if (r.null.kind == NullLaw::Kind::chi_square) {
    null = {{"kind", "chi_square"}, {"df", r.null.df}};
  } else {
    null = {{"kind", "monte_carlo"}, {"B", r.null.draws}, {"seed", seed}};
  }
  json out = {{"schema", kSchema}, {"command", "test"}, {"input", path}, {"test", r.name},
              {"statistic", r.statistic}, {"null", null}, {"p_value", r.p_value},
              {"alpha", r.alpha}, {"reject", r.reject}};
  if (!subset.empty()) {
    json labels = json::array();
    for (ItemIndex i : subset) labels.push_back(t.labels[i]);
    out["subset"] = labels;
  }
  out.update(extra);
  return out;
}

struct BootstrapFlags {
  std::size_t replicates = kDefaultBootstrapReplicates;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool no_covariates = false;
  std::string covariates;
  std::string psi = "diff";
  std::string quartiles;
};

json cmd_bootstrap(const std::string& path, const BootstrapFlags& f) {
  ModelData d = prepare(read_game_table_file(path), f.covariates, f.psi, f.no_covariates);
  const GameTable& t = d.table;
  BootstrapOptions opts;
  opts.replicates = f.replicates;
  opts.seed = f.seed ? *f.seed : seed_from_environment();
  opts.with_covariates = d.covariate_count() > 0;
  opts.threads = f.threads ? *f.threads : default_thread_count();
  BootstrapReport rep;
  try {
    rep = bootstrap_ranks(d.records, t.item_count(), opts);
  } catch (const IdentifiabilityError& e) {
    explain(e, d);
  }
  json samples = json::array();
  for (const RankVector& r : rep.rank_samples) samples.push_back(r.r);
  json quart = json::array();
  for (std::size_t i = 0; i < t.item_count(); ++i) {
    quart.push_back({{"label", t.labels[i]}, {"q1", rep.quartiles[i].q1},
                     {"median", rep.quartiles[i].median}, {"q3", rep.quartiles[i].q3}});
  }
  if (!f.quartiles.empty()) {
    std::ofstream q(f.quartiles);
    if (!q) throw DataError("cannot write '" + f.quartiles + "'");
    q << "label,q1,median,q3\n";
    for (const auto& row : quart) {
      q << row["label"].get<std::string>() << ',' << row["q1"].dump() << ',' << row["median"].dump() << ','
        << row["q3"].dump() << '\n';
    }
  }
  return {{"schema", kSchema},
          {"command", "bootstrap"},
          {"input", path},
          {"model", opts.with_covariates ? "merits_with_covariates" : "merits"},
          {"B", rep.requested},
          {"successful", rep.rank_samples.size()},
          {"skipped", rep.skipped},
          {"seed", rep.seed},
          {"items", t.labels},
          {"point_ranks", rep.point_ranks.r},
          {"rank_samples", samples},
          {"quartiles", quart}};
}

struct SimulateFlags {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

json cmd_simulate(const std::string& config_path, const SimulateFlags& f) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("config", "cannot open '" + config_path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  const SimulationReport rep = run_campaign(cfg, f.seed, f.threads);
  fs::create_directories(f.out_dir);
  const std::string stem = fs::path(config_path).stem().string();
  const fs::path csv = fs::path(f.out_dir) / (stem + ".csv");
  const fs::path meta = fs::path(f.out_dir) / (stem + ".json");
  {
    std::ofstream out(csv);
    if (!out) throw DataError("cannot write '" + csv.string() + "'");
    rep.write_csv(out);
  }
  json prov = rep.provenance();
  {
    std::ofstream out(meta);
    if (!out) throw DataError("cannot write '" + meta.string() + "'");
    out << prov.dump(2) << '\n';
  }
  prov["command"] = "simulate";
  prov["outputs"] = {{"series", csv.string()}, {"provenance", meta.string()}};
  return prov;
}

void emit(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Least-squares merits and rankings from paired comparisons"};
  app.name("graph_rank");
  app.require_subcommand(1);

  std::string input;
  std::string output;

  FitFlags ff;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate merits (and covariate effects)");
  fit_cmd->add_option("csv", input, "item_i,item_j,outcome[,covariates...]; outcome is item_i minus item_j")->required();
  fit_cmd->add_option("--constraint", ff.constraint, "sum | anchor=<label> | file=<label,value csv>");
  fit_cmd->add_option("--covariates", ff.covariates, "columns a,b (combined) or a:b pairs (per side, via --psi)");
  fit_cmd->add_option("--psi", ff.psi, "combination rule for per-side covariates");
  fit_cmd->add_option("--weights", ff.weights, "label,label,weight csv");
  fit_cmd->add_flag("--center-covariates", ff.center, "subtract covariate column means");
  fit_cmd->add_flag("--no-covariates", ff.no_covariates, "ignore covariate columns");
  fit_cmd->add_option("--variance-divisor", ff.divisor, "n (default) or dof");
  fit_cmd->add_option("--output,-o", output, "write the report here instead of stdout");

  TestFlags tf;
  auto* test_cmd = app.add_subcommand("test", "Hypothesis tests on merits");
  test_cmd->add_option("csv", input)->required();
  test_cmd->add_option("--test", tf.test, "all_equal | contrasts | all_distinct | item_not_worst")->required();
  test_cmd->add_option("--alpha", tf.alpha);
  test_cmd->add_option("--subset", tf.subset, "comma-separated labels");
  test_cmd->add_option("--item", tf.item);
  test_cmd->add_option("--mc-b", tf.mc_b, "Monte-Carlo null size");
  test_cmd->add_option("--seed", tf.seed);
  test_cmd->add_option("--threads", tf.threads);
  test_cmd->add_option("--constraint", tf.constraint);
  test_cmd->add_option("--output,-o", output);

  BootstrapFlags bf;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Bootstrap distribution of the ranking");
  boot_cmd->add_option("csv", input)->required();
  boot_cmd->add_option("-B,--B", bf.replicates, "resamples (default 200)");
  boot_cmd->add_option("--seed", bf.seed);
  boot_cmd->add_option("--threads", bf.threads);
  boot_cmd->add_flag("--no-covariates", bf.no_covariates);
  boot_cmd->add_option("--covariates", bf.covariates);
  boot_cmd->add_option("--psi", bf.psi);
  boot_cmd->add_option("--quartiles", bf.quartiles, "write label,q1,median,q3 csv");
  boot_cmd->add_option("--output,-o", output);

  SimulateFlags sf;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation campaign from a JSON config");
  sim_cmd->add_option("config", input)->required();
  sim_cmd->add_option("--out-dir", sf.out_dir);
  sim_cmd->add_option("--seed", sf.seed);
  sim_cmd->add_option("--threads", sf.threads);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    json report;
    if (*fit_cmd) report = cmd_fit(input, ff);
    else if (*test_cmd) report = cmd_test(input, tf);
    else if (*boot_cmd) report = cmd_bootstrap(input, bf);
    else report = cmd_simulate(input, sf);
    emit(report, output, out);
    return kSuccess;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IdentifiabilityError& e) {
    err << "identifiability error: " << e.what() << '\n';
    return kIdentifiabilityError;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace graphrank::cli
