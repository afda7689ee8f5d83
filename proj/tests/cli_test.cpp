#include "cli.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

using namespace dissflow;

namespace {

std::string data(const std::string& name) { return std::string(DISSFLOW_TEST_DATA) + "/" + name; }

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json records(const Outcome& o) { return nlohmann::json::parse(o.out); }

}  // namespace

TEST(Cli, SolveUpperCornerTable) {
  const auto o = run({"solve", data("three_node.json"), "--scenario", "upper"});
  EXPECT_EQ(o.code, cli::kExitOk);
  EXPECT_NE(o.out.find("feasible"), std::string::npos);
  EXPECT_NE(o.out.find("cost: 3"), std::string::npos);
}

TEST(Cli, SolveRecords) {
  const auto o = run({"solve", data("three_node.json"), "--format", "records"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const auto j = records(o);
  EXPECT_EQ(j["schema"], cli::kReportSchema);
  EXPECT_EQ(j["schema_version"], cli::kReportSchemaVersion);
  const auto& nodes = j["state"]["nodes"];
  EXPECT_NEAR(nodes[0]["pi"].get<double>(), 3.0, 1e-9);
  EXPECT_NEAR(nodes[1]["pi"].get<double>(), 2.0, 1e-9);
  EXPECT_NEAR(nodes[2]["pi"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(j["cost"].get<double>(), 3.0, 1e-8);
  EXPECT_LE(j["conservation_residual"].get<double>(), 1e-9);
}

TEST(Cli, SolveExplicitScenarioAndTolerance) {
  const auto o = run({"solve", data("three_node.json"), "--scenario", "-0.25", "--tol", "1e-12", "--format", "records"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const auto j = records(o);
  EXPECT_NEAR(j["state"]["nodes"][1]["pi"].get<double>(), 1.5625, 1e-11);
  EXPECT_LE(j["conservation_residual"].get<double>(), 1e-12);
}

TEST(Cli, SolveZeroInjection) {
  const auto o = run({"solve", data("zero_injection.json"), "--format", "records"});
  ASSERT_EQ(o.code, cli::kExitOk);
  for (const auto& e : records(o)["state"]["edges"]) EXPECT_EQ(e["phi"].get<double>(), 0.0);
}

TEST(Cli, SolveInfeasibleExitCode) {
  EXPECT_EQ(run({"solve", data("three_node_tight.json")}).code, cli::kExitInfeasible);
}

TEST(Cli, SolveNumericalFailure) {
  // One Newton step cannot reach this tolerance from the default start.
  const std::string path = ::testing::TempDir() + "/one_step.json";
  std::ifstream in(data("three_node.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  text.insert(text.rfind('}'), R"(, "solver": {"max_iterations": 1})");
  std::ofstream(path) << text;
  const auto o = run({"solve", path, "--tol", "1e-14"});
  EXPECT_EQ(o.code, cli::kExitNumerical);
  EXPECT_NE(o.err.find("numerical failure"), std::string::npos);
  EXPECT_EQ(run({"check", path, "--tol", "1e-14"}).code, cli::kExitNumerical);
}

TEST(Cli, ParseErrorsAreUsageErrors) {
  const auto rev = run({"solve", data("reversed_bounds.json")});
  EXPECT_EQ(rev.code, cli::kExitUsage);
  EXPECT_NE(rev.err.find("q_lo exceeds q_hi"), std::string::npos);
  const auto syn = run({"solve", data("syntax_error.json")});
  EXPECT_EQ(syn.code, cli::kExitUsage);
  EXPECT_NE(syn.err.find("line 4"), std::string::npos);
  EXPECT_EQ(run({"check", data("unknown_key.json")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"check", data("missing.json")}).code, cli::kExitUsage);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"solve"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"solve", data("three_node.json"), "--scenario", "1,2"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"solve", data("three_node.json"), "--scenario", "abc"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"solve", data("three_node.json"), "--format", "xml"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"certify", data("three_node.json")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, CheckSlackAndTight) {
  const auto ok = run({"check", data("three_node.json")});
  EXPECT_EQ(ok.code, cli::kExitOk);
  EXPECT_EQ(ok.out.rfind("feasible", 0), 0u);
  EXPECT_NE(ok.out.find("worst_cost: 3"), std::string::npos);
  const auto bad = run({"check", data("three_node_tight.json"), "--format", "records"});
  EXPECT_EQ(bad.code, cli::kExitInfeasible);
  const auto j = records(bad);
  EXPECT_EQ(j["verdict"], "infeasible");
  ASSERT_EQ(j["violations"].size(), 1u);
  EXPECT_EQ(j["violations"][0]["node"], 1);
  EXPECT_EQ(j["violations"][0]["corner"], "upper");
  EXPECT_NEAR(j["violations"][0]["margin"].get<double>(), 0.1, 1e-8);
}

TEST(Cli, SweepRowsAndCornerFlags) {
  const auto o = run({"sweep", data("three_node.json"), "--resolution", "11", "--format", "records"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const auto j = records(o);
  const auto& rows = j["rows"];
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0]["corner"], "lower");
  EXPECT_EQ(rows[10]["corner"], "upper");
  EXPECT_NE(rows[10]["extrema"].get<std::string>().find("max_pi:1"), std::string::npos);
  EXPECT_NE(rows[0]["extrema"].get<std::string>().find("min_pi:1"), std::string::npos);
  for (std::size_t k = 1; k < 10; ++k) EXPECT_EQ(rows[k]["extrema"], "");
  const auto text = run({"sweep", data("three_node.json"), "--resolution", "11"});
  EXPECT_EQ(std::count(text.out.begin(), text.out.end(), '\n'), 12);
}

TEST(Cli, SweepMatchesCheckVerdict) {
  for (const char* f : {"three_node.json", "three_node_tight.json"}) {
    for (const char* r : {"2", "5", "9"}) {
      EXPECT_EQ(run({"sweep", data(f), "--resolution", r}).code, run({"check", data(f)}).code) << f << " " << r;
    }
  }
  EXPECT_EQ(run({"sweep", data("three_node.json"), "--resolution", "11", "--budget", "5"}).code, cli::kExitUsage);
}

TEST(Cli, CertifyInternalNode) {
  const auto o = run({"certify", data("three_node.json"), "--node", "2", "--format", "records"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const auto j = records(o);
  EXPECT_EQ(j["path"], (nlohmann::json{3, 2}));
  EXPECT_TRUE(j["strict"].get<bool>());
  EXPECT_TRUE(j["verified"].get<bool>());
  ASSERT_EQ(j["edges"].size(), 1u);
  EXPECT_NEAR(j["edges"][0]["phi_star"].get<double>(), -0.5, 1e-9);
  EXPECT_NEAR(j["edges"][0]["phi"].get<double>(), -1.0, 1e-9);
  const auto text = run({"certify", data("three_node.json"), "--node", "2"});
  EXPECT_NE(text.out.find("3 -> 2"), std::string::npos);
}

TEST(Cli, CertifyPreconditionsAreUsageErrors) {
  EXPECT_EQ(run({"certify", data("three_node.json"), "--node", "2", "--scenarios", "lower,upper"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run({"certify", data("three_node.json"), "--node", "3"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"certify", data("three_node.json"), "--node", "9"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"certify", data("three_node.json"), "--node", "2", "--scenarios", "upper"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"certify", data("three_node.json"), "--node", "2", "--scenarios", "mid,lower"}).code, cli::kExitOk);
}

TEST(Cli, OptimizeFindsLowerInjection) {
  const auto o = run({"optimize", data("three_node.json"), "--format", "records", "--seed", "3"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const auto j = records(o);
  EXPECT_EQ(j["status"], "feasible");
  EXPECT_NEAR(j["point"]["sources"][0]["q"].get<double>(), 0.5, 1e-9);
  EXPECT_NEAR(j["worst_cost"].get<double>(), 1.5, 1e-8);
  EXPECT_EQ(j["trace"].size(), j["evaluations"].get<std::size_t>());
  const auto capped = records(run({"optimize", data("three_node.json"), "--format", "records", "--budget", "3"}));
  EXPECT_LE(capped["evaluations"].get<int>(), 4);
}

TEST(Cli, OptimizeWithoutFeasiblePoint) {
  const std::string path = ::testing::TempDir() + "/hopeless.json";
  std::ifstream in(data("three_node.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  const std::string from = R"("pi_max": 4, "q_lo")";
  // pi_2 > pi_3 >= 1 whenever gas flows to the terminal.
  text.replace(text.find(from), from.size(), R"("pi_max": 1, "q_lo")");
  std::ofstream(path) << text;
  EXPECT_EQ(run({"optimize", path}).code, cli::kExitInfeasible);
}

TEST(Cli, ExportRoundTrip) {
  const auto once = run({"export", data("three_node.json")});
  ASSERT_EQ(once.code, cli::kExitOk);
  const std::string path = ::testing::TempDir() + "/exported.json";
  std::ofstream(path) << once.out;
  const auto twice = run({"export", path});
  EXPECT_EQ(twice.out, once.out);
  EXPECT_EQ(run({"check", path}).out, run({"check", data("three_node.json")}).out);
}

TEST(Cli, BinaryExitCodes) {
  auto status = [](const std::string& args) {
    const std::string cmd = std::string(DISSFLOW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("solve " + data("three_node.json")), 0);
  EXPECT_EQ(status("check " + data("three_node_tight.json")), 2);
  EXPECT_EQ(status("check " + data("reversed_bounds.json")), 4);
  EXPECT_EQ(status("bogus"), 4);
}
