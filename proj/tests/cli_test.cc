// Copyright 2026 The Wishart DP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wdp_cli.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "wishart_dp/accountants.h"
#include "wishart_dp/randmat.h"

namespace wishart_dp::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Wdp(std::vector<std::string> args) {
  args.insert(args.begin(), "wdp");
  std::ostringstream out, err;
  const int code = Dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json Parse(const Outcome& o) { return nlohmann::json::parse(o.out); }

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("wdp_cli_test_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST(CliTest, AccountVecMatchesLibrary) {
  const Outcome o = Wdp({"account-vec", "--rho", "0.999", "--d", "400", "--r", "128",
                         "--delta-prime", "1e-3", "--seed", "7", "--support-samples",
                         "100000"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const nlohmann::json j = Parse(o);

  VecAccountOptions opts;
  opts.support_samples = 100000;
  opts.support_seed = {7, 0};
  const VecAccountReport rep = *AccountVec({0.999, 400, 128}, 1e-3, opts);
  EXPECT_EQ(j["epsilon"].get<double>(), rep.eps_rho);
  EXPECT_EQ(j["delta"].get<double>(), rep.delta_rho);
  EXPECT_EQ(j["intermediates"]["K"].get<double>(), rep.K);
  EXPECT_EQ(j["manifest"]["subcommand"], "account-vec");
  EXPECT_EQ(j["manifest"]["params"]["seed"], "7");
  EXPECT_NE(o.err.find("eps_rho"), std::string::npos);
}

TEST(CliTest, SeparateNeverCollides) {
  const Outcome o =
      Wdp({"separate", "--d", "8", "--n", "3", "--r", "2", "--trials", "10000", "--seed", "7"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const nlohmann::json j = Parse(o);
  EXPECT_EQ(j["n_trials"], 10000);
  EXPECT_EQ(j["n_equal"], 0);
}

TEST(CliTest, MissingSeedIsUsageError) {
  const std::vector<std::vector<std::string>> invocations = {
      {"account-vec", "--rho", "0.999", "--d", "400", "--r", "16"},
      {"profile-mc", "--rho", "0.999", "--d", "400", "--r", "16"},
      {"account-large-r", "--d", "200", "--r", "150", "--s", "20", "--p", "20",
       "--delta-v", "1", "--sigma-g", "1", "--sigma-m", "1", "--beta", "1e-6",
       "--delta-par", "1e-5", "--rho-perp", "0.999", "--delta-prime-perp", "1e-3"},
      {"separate"}, {"amplify"}, {"spectrum"}, {"mia"}, {"train"}};
  for (const auto& args : invocations) {
    const Outcome o = Wdp(args);
    EXPECT_EQ(o.code, kExitUsage) << args[0];
    EXPECT_NE(o.err.find("--seed is required"), std::string::npos) << args[0] << ": " << o.err;
  }
}

TEST(CliTest, DeterministicSubcommandsTakeNoSeed) {
  const Outcome o = Wdp({"choose-alpha", "--eps", "1", "--mu", "4", "--d", "2048", "--r",
                         "64", "--seed", "1"});
  EXPECT_EQ(o.code, kExitUsage);
}

TEST(CliTest, UnknownFlagSuggestsClosest) {
  const Outcome o = Wdp({"account-vec", "--rho", "0.999", "--d", "400", "--r", "16",
                         "--seed", "1", "--deltaprime", "1e-3"});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("did you mean --delta-prime"), std::string::npos) << o.err;
}

TEST(CliTest, UnknownSubcommandSuggestsClosest) {
  const Outcome o = Wdp({"seperate", "--seed", "1"});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("did you mean 'separate'"), std::string::npos) << o.err;
}

TEST(CliTest, MalformedNumberIsUsageError) {
  EXPECT_EQ(Wdp({"account-vec", "--rho", "abc", "--d", "400", "--r", "16", "--seed", "1"})
                .code,
            kExitUsage);
}

TEST(CliTest, DomainErrorNamesPrecondition) {
  const Outcome o =
      Wdp({"account-vec", "--rho", "1.5", "--d", "400", "--r", "16", "--seed", "1"});
  EXPECT_EQ(o.code, kExitDomain);
  EXPECT_NE(o.err.find("rho"), std::string::npos) << o.err;
}

TEST(CliTest, RegimeErrorIsPreconditionError) {
  const Outcome o = Wdp({"choose-alpha", "--eps", "1", "--mu", "4", "--s", "1000000",
                         "--d", "2048", "--r", "4", "--eta", "0.5"});
  EXPECT_EQ(o.code, kExitDomain);
  EXPECT_NE(o.err.find("lower condition"), std::string::npos) << o.err;
}

TEST(CliTest, ChooseAlphaBeatsGaussian) {
  const Outcome o = Wdp({"choose-alpha", "--eps", "1", "--mu", "4", "--s", "1", "--d",
                         "2048", "--r", "64", "--eta", "0.5"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const nlohmann::json j = Parse(o);
  EXPECT_LT(j["delta"].get<double>(), j["intermediates"]["delta_gauss"].get<double>());
  EXPECT_EQ(j["intermediates"]["chosen_alpha"].get<double>(), 0.046875);
}

TEST(CliTest, SelftestPasses) {
  const Outcome o = Wdp({"selftest"});
  EXPECT_EQ(o.code, kExitOk) << o.err;
  const nlohmann::json j = Parse(o);
  EXPECT_EQ(j["failed"], 0);
  // Every kernel example appears in the table.
  std::vector<std::string> names;
  for (const auto& c : j["checks"]) names.push_back(c["name"]);
  for (const char* expected :
       {"normal_cdf(0)", "normal_cdf(40)", "normal_cdf(1.959964)", "student_t_quantile(5, 0.5)",
        "student_t_quantile(1, 0.975)", "student_t_quantile(2, 0.95)",
        "chi2_quantile(2, 0.95)", "chi2_quantile(1, 0.6826894921)",
        "chi2_quantile(10, 1e-12)", "reg_inc_beta(1, 2.5, 7)", "reg_inc_beta(0.5, 1, 1)",
        "reg_inc_beta(0.25, 2, 3)", "log_gamma(1)", "log_gamma(0.5)", "log_gamma(5)"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
  }
  EXPECT_NE(o.err.find("PASS normal_cdf(0)"), std::string::npos);
}

TEST(CliTest, SelftestFaultInjectionExitsWithConvergenceCode) {
  const Outcome o = Wdp({"selftest", "--inject-fault", "quantile-tolerance"});
  EXPECT_EQ(o.code, kExitConvergence);
  EXPECT_GT(Parse(o)["failed"].get<int>(), 0);
  EXPECT_NE(o.err.find("FAIL"), std::string::npos);
}

TEST(CliTest, HelpListsEveryFlagWithDefaults) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> expected = {
      {"account-vec", {"--rho", "--d", "--r", "--delta-prime", "--seed", "--threads",
                       "--support-samples"}},
      {"account-small-r", {"--eps", "--sens", "--s", "--d", "--r", "--sigma", "--alpha"}},
      {"account-large-r", {"--p", "--delta-v", "--sigma-g", "--sigma-m", "--beta",
                           "--delta-par", "--rho-perp", "--delta-prime-perp"}},
      {"choose-alpha", {"--eps", "--mu", "--s", "--eta", "--tail-rule"}},
      {"profile-mc", {"--rho", "--r", "--delta", "--n", "--eps-grid", "--out"}},
      {"amplify", {"--rho", "--gamma", "--delta", "--trials"}},
      {"separate", {"--d", "--n", "--r", "--trials", "--entry-var"}},
      {"mia", {"--classes", "--n-in", "--n-out", "--mechanism", "--sigma", "--config"}},
      {"train", {"--task", "--mechanism", "--eps-target", "--clip", "--out"}},
      {"spectrum", {"--d", "--r", "--t", "--draws"}},
      {"selftest", {"--manifest"}},
  };
  for (const auto& [sub, flags] : expected) {
    const Outcome o = Wdp({sub, "--help"});
    EXPECT_EQ(o.code, kExitOk) << sub;
    for (const std::string& f : flags) {
      EXPECT_NE(o.out.find(f + " "), std::string::npos) << sub << " lacks " << f;
    }
    EXPECT_EQ(o.out.find("inject-fault"), std::string::npos);
  }
  const Outcome vec = Wdp({"account-vec", "--help"});
  EXPECT_NE(vec.out.find("[0.001]"), std::string::npos) << vec.out;
  EXPECT_NE(vec.out.find("[1000000]"), std::string::npos) << vec.out;
}

TEST_F(CliFileTest, ProfileIsByteIdenticalAcrossRunsAndThreads) {
  auto run = [&](const std::string& name, const std::string& threads) {
    return Wdp({"profile-mc", "--rho", "0.999", "--d", "400", "--r", "16,128", "--n",
                "20000", "--seed", "7", "--threads", threads, "--out", Path(name)});
  };
  const Outcome a = run("p.csv", "1");
  const Outcome b = run("p.csv", "1");
  const Outcome c = run("p.csv", "3");
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(a.err, c.err);
  const std::string csv = ReadFile(Path("p.csv"));
  EXPECT_EQ(csv.rfind("eps,delta_hat,stderr,n,rho,d,r,seed\n", 0), 0u);
  const Outcome d = run("q.csv", "2");
  EXPECT_EQ(ReadFile(Path("q.csv")), csv);
  EXPECT_TRUE(fs::exists(Path("p.csv.manifest.json")));
  EXPECT_EQ(Parse(a)["profiles"].size(), 2u);
}

TEST_F(CliFileTest, ReplayReproducesOutputs) {
  const Outcome a = Wdp({"spectrum", "--d", "300", "--r", "12", "--draws", "4", "--seed",
                         "11", "--out", Path("s.csv")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const std::string manifest = Path("s.csv.manifest.json");
  const nlohmann::json m = nlohmann::json::parse(ReadFile(manifest));
  EXPECT_EQ(m["subcommand"], "spectrum");
  EXPECT_EQ(m["outputs"][0], Path("s.csv"));
  EXPECT_EQ(m["seed"]["master"], 11);

  const Outcome b = Wdp({"replay", "--manifest", manifest, "--out", Path("t.csv")});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(ReadFile(Path("t.csv")), ReadFile(Path("s.csv")));
  nlohmann::json ja = Parse(a), jb = Parse(b);
  ja.erase("manifest");
  jb.erase("manifest");
  EXPECT_EQ(ja.dump(), jb.dump());
}

TEST_F(CliFileTest, ExplicitManifestPath) {
  const Outcome o = Wdp({"amplify", "--trials", "50", "--seed", "3", "--manifest",
                         Path("amp.json")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const nlohmann::json m = nlohmann::json::parse(ReadFile(Path("amp.json")));
  EXPECT_EQ(m["params"]["trials"], "50");
  EXPECT_EQ(m["params"]["rho"], "0.2");
}

TEST_F(CliFileTest, UnwritableOutputIsDomainError) {
  const Outcome o = Wdp({"spectrum", "--d", "10", "--r", "2", "--draws", "1", "--seed", "1",
                         "--out", Path("missing/dir/s.csv")});
  EXPECT_EQ(o.code, kExitDomain);
}

TEST_F(CliFileTest, MatrixDumpReadsBack) {
  const Outcome o = Wdp({"spectrum", "--d", "30", "--r", "4", "--draws", "2", "--seed", "8",
                         "--dump-matrix", Path("z.csv")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  std::ifstream in(Path("z.csv"));
  const absl::StatusOr<Eigen::MatrixXd> z = ReadMatrixCsv(in);
  ASSERT_TRUE(z.ok()) << z.status();
  EXPECT_EQ(z->rows(), 30);
  EXPECT_EQ(z->cols(), 4);
  EXPECT_EQ(*z, DrawWishart(30, 4, 0.25, Seed{8, 0}.Child(0))->Z());
}

TEST_F(CliFileTest, TrainWritesTrajectory) {
  const Outcome o = Wdp({"train", "--seed", "5", "--task", "ridge", "--d", "16", "--n-data",
                         "200", "--mechanism", "RP_GD", "--r", "4", "--T", "25", "--eta",
                         "0.2", "--out", Path("traj.csv")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const nlohmann::json j = Parse(o);
  EXPECT_LT(j["final_loss"].get<double>(), j["initial_loss"].get<double>());
  std::ifstream in(Path("traj.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 25);
}

TEST_F(CliFileTest, ConfigExcludesInlineTrainingFlags) {
  {
    std::ofstream cfg(Path("c.cfg"));
    cfg << "mechanism = RP_GD\nT = 5\neta = 0.1\nr = 4\n";
  }
  EXPECT_EQ(Wdp({"train", "--seed", "1", "--config", Path("c.cfg")}).code, kExitOk);
  const Outcome o = Wdp({"train", "--seed", "1", "--config", Path("c.cfg"), "--T", "3"});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("--T"), std::string::npos) << o.err;
}

TEST_F(CliFileTest, NoiseFreeMiaSeparates) {
  const Outcome o = Wdp({"mia", "--seed", "1", "--n-in", "20", "--n-out", "20", "--out",
                         Path("mia.csv")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_GE(Parse(o)["auc"].get<double>(), 0.99);
  EXPECT_EQ(ReadFile(Path("mia.csv")).rfind("label,score\n", 0), 0u);
}

TEST(CliTest, ThreadsEnvironmentDoesNotChangeResults) {
  const std::vector<std::string> args = {"separate", "--d", "16", "--n", "2", "--r", "3",
                                         "--trials", "500", "--seed", "9"};
  const Outcome a = Wdp(args);
  setenv("WISHART_DP_THREADS", "2", 1);
  const Outcome b = Wdp(args);
  unsetenv("WISHART_DP_THREADS");
  EXPECT_EQ(a.out, b.out);
}

}  // namespace
}  // namespace wishart_dp::cli
