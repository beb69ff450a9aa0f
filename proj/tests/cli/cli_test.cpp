#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"

namespace graphrank::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
  json report() const { return json::parse(out); }
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("graph_rank_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& body) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << body;
    return p.string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  // Four teams, every pair meets twice (once at each home) plus noise.
  std::string league(double noise, bool unbalanced = false) const {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    const char* names[] = {"Ants", "Bees", "Cats", "Dogs"};
    const double merit[] = {1.5, 0.5, -0.5, -1.5};
    std::string csv = "home,away,margin,venue\n";
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        const double y = merit[i] - merit[j] + 0.8 + noise * normal(rng);
        csv += std::string(names[i]) + "," + names[j] + "," + std::to_string(y) + ",1\n";
      }
    if (unbalanced) csv += "Dogs,Ants,-2.2,1\nDogs,Bees,-1.2,1\n";
    return csv;
  }

  fs::path dir_;
};

TEST_F(Cli, FitThreeItemExample) {
  const std::string csv = write("k3.csv", "item_i,item_j,outcome\nA,B,1\nA,C,2\nB,C,1\n");
  const Result r = call({"fit", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.report();
  EXPECT_EQ(j["schema"], "graph-rank/1");
  const double expected[] = {1, 0, -1};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(j["items"][i]["merit"].get<double>(), expected[i], 1e-12);
    EXPECT_EQ(j["items"][i]["rank"].get<int>(), i + 1);
  }
  EXPECT_EQ(j["items"][0]["label"], "A");
  EXPECT_NEAR(j["diagnostics"]["lambda2"].get<double>(), 3.0, 1e-12);
  EXPECT_TRUE(j["diagnostics"]["connected"].get<bool>());
}

TEST_F(Cli, DataErrorsExitTwo) {
  const std::string empty = write("empty.csv", "");
  Result r = call({"fit", empty});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
  EXPECT_EQ(call({"fit", (dir_ / "missing.csv").string()}).code, 2);

  r = call({"fit", write("bad.csv", "a,b,y\nA,B,1\nA,C,x\n")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(":3"), std::string::npos) << r.err;
  EXPECT_EQ(call({"fit", write("self.csv", "a,b,y\nA,A,1\nA,B,2\n")}).code, 2);
  EXPECT_EQ(call({"fit", write("ragged.csv", "a,b,y\nA,B,1,4\n")}).code, 2);
}

TEST_F(Cli, DisconnectedExitThreeWithComponents) {
  const Result r = call({"fit", write("split.csv", "a,b,y\nA,B,1\nC,D,2\n")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("{A,B}"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("{C,D}"), std::string::npos) << r.err;
}

TEST_F(Cli, NonIdentifiableCovariateExitThree) {
  // venue = z_i - z_j with z = (1, 0, 1): inside the span of the incidence matrix.
  const Result r = call({"fit", write("z.csv", "a,b,y,venue\nA,B,1,1\nA,B,2,1\nB,C,0.5,-1\nB,C,1,-1\n")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("venue="), std::string::npos) << r.err;
  EXPECT_EQ(call({"fit", (dir_ / "z.csv").string(), "--no-covariates"}).code, 0);
}

TEST_F(Cli, ConfigErrorsExitFour) {
  const std::string csv = write("k3.csv", "a,b,y,venue\nA,B,1,1\nA,C,2,-1\nB,C,1,1\nA,B,0,-1\n");
  EXPECT_EQ(call({"fit", csv, "--bogus"}).code, 4);
  EXPECT_EQ(call({"fit", csv, "--covariates", "height"}).code, 4);
  EXPECT_EQ(call({"fit", csv, "--covariates", "venue", "--no-covariates"}).code, 4);
  EXPECT_EQ(call({"fit", csv, "--constraint", "median"}).code, 4);
  EXPECT_EQ(call({"fit", csv, "--psi", "ratio", "--covariates", "venue:venue"}).code, 4);
  EXPECT_EQ(call({"test", csv, "--test", "anova"}).code, 4);
  EXPECT_EQ(call({"test", csv, "--test", "item_not_worst"}).code, 4);
  EXPECT_EQ(call({}).code, 4);
}

TEST_F(Cli, ConstraintRoundTripKeepsDifferences) {
  const std::string csv = write("league.csv", league(0.4));
  const json sum = call({"fit", csv, "--no-covariates"}).report();
  const json anchored = call({"fit", csv, "--no-covariates", "--constraint", "anchor=Cats"}).report();
  const std::string vfile = write("v.csv", "Ants,1\nBees,2\nCats,3\nDogs,4\n");
  const json custom = call({"fit", csv, "--no-covariates", "--constraint", "file=" + vfile}).report();
  EXPECT_EQ(anchored["items"][2]["merit"].get<double>(), 0.0);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) {
      const double d = sum["items"][i]["merit"].get<double>() - sum["items"][k]["merit"].get<double>();
      EXPECT_NEAR(anchored["items"][i]["merit"].get<double>() - anchored["items"][k]["merit"].get<double>(), d, 1e-9);
      EXPECT_NEAR(custom["items"][i]["merit"].get<double>() - custom["items"][k]["merit"].get<double>(), d, 1e-9);
    }
    EXPECT_EQ(sum["items"][i]["rank"], anchored["items"][i]["rank"]);
  }
}

TEST_F(Cli, CovariatesVersusNoCovariates) {
  const std::string csv = write("league.csv", league(0.3, true));
  const Result with = call({"fit", csv});
  const Result without = call({"fit", csv, "--no-covariates"});
  ASSERT_EQ(with.code, 0) << with.err;
  ASSERT_EQ(without.code, 0) << without.err;
  const json a = with.report(), b = without.report();
  ASSERT_TRUE(a.contains("covariates"));
  EXPECT_FALSE(b.contains("covariates"));
  EXPECT_NEAR(a["covariates"]["beta"]["venue"].get<double>(), 0.8, 0.4);
  EXPECT_TRUE(a["covariates"]["identifiability"]["identifiable"].get<bool>());
  EXPECT_EQ(a["covariates"]["names"][0], "venue");
  // The two unbalanced home games pull the covariate-free merits toward Dogs.
  EXPECT_GT(b["items"][3]["merit"].get<double>(), a["items"][3]["merit"].get<double>());
}

TEST_F(Cli, HypothesisTests) {
  const std::string csv = write("league.csv", league(0.5));
  Result r = call({"test", csv, "--test", "all_equal"});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = r.report();
  EXPECT_EQ(j["null"]["kind"], "chi_square");
  EXPECT_EQ(j["null"]["df"].get<double>(), 3.0);
  EXPECT_TRUE(j["reject"].get<bool>());

  j = call({"test", csv, "--test", "contrasts", "--subset", "Ants,Dogs"}).report();
  EXPECT_EQ(j["null"]["df"].get<double>(), 1.0);
  EXPECT_EQ(j["subset"], json({"Ants", "Dogs"}));

  j = call({"test", csv, "--test", "item_not_worst", "--item", "Ants", "--mc-b", "999", "--seed", "5"}).report();
  EXPECT_EQ(j["null"]["kind"], "monte_carlo");
  EXPECT_EQ(j["null"]["B"].get<int>(), 999);
  EXPECT_EQ(j["null"]["seed"].get<int>(), 5);
  EXPECT_LT(j["p_value"].get<double>(), 0.01);

  // Duplicated merits: Cats and Dogs play to a draw against everybody alike.
  const std::string tied = write("tied.csv",
                                 "a,b,y\nAnts,Cats,1.2\nAnts,Cats,0.8\nAnts,Dogs,1.2\nAnts,Dogs,0.8\n"
                                 "Cats,Dogs,0.2\nCats,Dogs,-0.2\n");
  j = call({"test", tied, "--test", "all_distinct", "--mc-b", "2000"}).report();
  EXPECT_GT(j["p_value"].get<double>(), 0.95);

  // Seed from the environment when no flag is given.
  ::setenv("GRAPH_RANK_SEED", "31", 1);
  j = call({"test", csv, "--test", "all_distinct", "--mc-b", "100"}).report();
  ::unsetenv("GRAPH_RANK_SEED");
  EXPECT_EQ(j["null"]["seed"].get<int>(), 31);

  const std::string zero = write("zero.csv", "a,b,y\nA,B,0\nB,C,0\nA,C,0\n");
  EXPECT_EQ(call({"test", zero, "--test", "all_equal"}).code, 2);
}

TEST_F(Cli, BootstrapDeterministicAndQuartiles) {
  const std::string csv = write("league.csv", league(0.8));
  const Result a = call({"bootstrap", csv, "--B", "40", "--seed", "9", "--threads", "1"});
  const Result b = call({"bootstrap", csv, "--B", "40", "--seed", "9", "--threads", "1"});
  const Result c = call({"bootstrap", csv, "-B", "40", "--seed", "9", "--threads", "4"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  const json j = a.report();
  EXPECT_EQ(j["B"].get<int>(), 40);
  EXPECT_EQ(j["successful"].get<int>() + j["skipped"].get<int>(), 40);

  const json def = call({"bootstrap", csv, "--seed", "1"}).report();
  EXPECT_EQ(def["B"].get<int>(), 200);

  const std::string zero = write("exact.csv", league(0.0));
  const std::string qpath = (dir_ / "q.csv").string();
  const json z = call({"bootstrap", zero, "--B", "30", "--no-covariates", "--quartiles", qpath}).report();
  for (const json& q : z["quartiles"]) {
    EXPECT_EQ(q["q1"], q["median"]);
    EXPECT_EQ(q["q3"], q["median"]);
  }
  EXPECT_EQ(slurp(qpath).substr(0, 20), "label,q1,median,q3\nA");
}

TEST_F(Cli, SimulateDeterministicAcrossThreads) {
  const std::string cfg = write("tiny.json",
                                R"({"campaign": "consistency", "m_grid": [5, 10], "gammas": [0, 0.5],
                                    "errors": ["normal", "t3_scaled"], "replicates": 30, "seed": 12})");
  const Result one = call({"simulate", cfg, "--out-dir", (dir_ / "one").string(), "--threads", "1"});
  const Result many = call({"simulate", cfg, "--out-dir", (dir_ / "many").string(), "--threads", "6"});
  ASSERT_EQ(one.code, 0) << one.err;
  ASSERT_EQ(many.code, 0) << many.err;
  EXPECT_EQ(slurp(dir_ / "one" / "tiny.csv"), slurp(dir_ / "many" / "tiny.csv"));
  EXPECT_EQ(slurp(dir_ / "one" / "tiny.json"), slurp(dir_ / "many" / "tiny.json"));
  EXPECT_FALSE(slurp(dir_ / "one" / "tiny.csv").empty());
  const json prov = json::parse(slurp(dir_ / "one" / "tiny.json"));
  EXPECT_EQ(prov["seed"].get<int>(), 12);
  EXPECT_EQ(prov["schema"], "graph-rank/1");

  const std::string bad = write("bad.json", R"({"campaign": "sparse", "K": [100], "p_rules": ["2"]})");
  const Result r = call({"simulate", bad, "--out-dir", (dir_ / "bad").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("p_rules"), std::string::npos);
  EXPECT_EQ(call({"simulate", write("broken.json", "{not json")}).code, 4);
}

}  // namespace
}  // namespace graphrank::cli
