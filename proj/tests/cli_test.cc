#include "commands.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "clocksync/control_io.h"
#include "json.hpp"

namespace clocksync::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() /
           ("clocksync_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const {
    return (dir_ / name).string();
  }

  int Call(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::Run(args, out_, err_);
  }

  std::vector<std::string> Model(const std::string& cmd) const {
    return {cmd,    "--alpha", "1", "--beta",   "1", "--n", "1",
            "--sigma2", "1",   "--umax", "2", "--r0", "1", "--horizon",
            "3"};
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

std::vector<std::vector<std::string>> ReadCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

TEST_F(CliTest, SynthesizeSingularExample) {
  auto args = Model("synthesize");
  args.insert(args.end(), {"--out", Path("s.json"), "--trajectory",
                           Path("t.csv"), "--samples", "31"});
  ASSERT_EQ(Call(args), 0) << err_.str();
  EXPECT_NE(out_.str().find("regime S0"), std::string::npos);

  const nlohmann::json doc = nlohmann::json::parse(ReadFile(Path("s.json")));
  EXPECT_EQ(doc["regime"], "S0");
  EXPECT_NEAR(doc["cost"].get<double>(), 5.5, 1e-12);
  EXPECT_NEAR(doc["switch_times"][0].get<double>(), 2.0, 1e-12);
  EXPECT_NEAR(doc["terminal_r"].get<double>(), 2.0, 1e-12);
  EXPECT_EQ(doc["version"], "1");

  const auto rows = ReadCsv(ReadFile(Path("t.csv")));
  ASSERT_GT(rows.size(), 30u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "r", "psi", "u"}));
  for (size_t i = 1; i < rows.size(); ++i) {
    const double t = std::stod(rows[i][0]);
    if (t < 2.0) EXPECT_NEAR(std::stod(rows[i][1]), 1.0, 1e-12) << t;
  }
}

TEST_F(CliTest, ShortHorizonIsZero) {
  auto args = Model("synthesize");
  args.back() = "0.01";
  args.insert(args.end(), {"--out", Path("z.json")});
  ASSERT_EQ(Call(args), 0) << err_.str();
  const nlohmann::json doc = nlohmann::json::parse(ReadFile(Path("z.json")));
  EXPECT_EQ(doc["regime"], "Z");
  EXPECT_TRUE(doc["switch_times"].empty());
}

TEST_F(CliTest, InvalidParameterIsReported) {
  auto args = Model("synthesize");
  args[2] = "-1";
  args.insert(args.end(), {"--out", Path("bad.json")});
  EXPECT_NE(Call(args), 0);
  EXPECT_NE(err_.str().find("alpha"), std::string::npos);
  EXPECT_FALSE(fs::exists(Path("bad.json")));
}

TEST_F(CliTest, MissingSubcommandFails) {
  EXPECT_NE(Call({}), 0);
  EXPECT_NE(Call({"synthesize"}), 0);
}

TEST_F(CliTest, OutputsAreByteIdentical) {
  auto args = Model("synthesize");
  auto first = args;
  first.insert(first.end(), {"--out", Path("a.json")});
  auto second = args;
  second.insert(second.end(), {"--out", Path("b.json")});
  ASSERT_EQ(Call(first), 0);
  ASSERT_EQ(Call(second), 0);
  EXPECT_EQ(ReadFile(Path("a.json")), ReadFile(Path("b.json")));

  auto sim = Model("simulate");
  sim.insert(sim.end(), {"--u", "1", "--runs", "50", "--out", Path("m1.csv")});
  ASSERT_EQ(Call(sim), 0) << err_.str();
  sim.back() = Path("m2.csv");
  sim.insert(sim.end(), {"--threads", "3"});
  ASSERT_EQ(Call(sim), 0) << err_.str();
  EXPECT_EQ(ReadFile(Path("m1.csv")), ReadFile(Path("m2.csv")));
}

TEST_F(CliTest, ControlDocumentRoundTrip) {
  auto args = Model("synthesize");
  args.insert(args.end(), {"--out", Path("s.json")});
  ASSERT_EQ(Call(args), 0);
  const ControlDocument doc = ParseControlDocument(ReadFile(Path("s.json")));
  EXPECT_EQ(doc.instance.r0, 1.0);
  EXPECT_EQ(doc.instance.horizon, 3.0);
  ASSERT_EQ(doc.control.segments().size(), 2u);
  EXPECT_EQ(doc.control.segments()[0].u, 1.0);
  const std::string again =
      ControlDocumentToJson(doc.instance, doc.control).dump();
  const ControlDocument twice = ParseControlDocument(again);
  EXPECT_EQ(ControlDocumentToJson(twice.instance, twice.control).dump(), again);
}

TEST_F(CliTest, SimulateSynthesizedControl) {
  auto args = Model("synthesize");
  args[6] = "8";
  args[10] = "4";
  args.insert(args.end(), {"--out", Path("s.json")});
  ASSERT_EQ(Call(args), 0) << err_.str();
  ASSERT_EQ(Call({"simulate", "--control", Path("s.json"), "--runs", "400",
                  "--checkpoints", "0,1,2,3", "--out", Path("sim.csv")}),
            0)
      << err_.str();
  EXPECT_NE(out_.str().find("max |z|"), std::string::npos);
  const auto rows = ReadCsv(ReadFile(Path("sim.csv")));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "empirical_r", "std_error",
                                               "ode_r", "z"}));
  for (size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(std::abs(std::stod(rows[i][4])), 4.0);
  }
}

TEST_F(CliTest, SimulateNeedsControl) {
  auto args = Model("simulate");
  args.insert(args.end(), {"--out", Path("x.csv")});
  EXPECT_NE(Call(args), 0);
  EXPECT_NE(err_.str().find("--control"), std::string::npos);
}

TEST_F(CliTest, RegimeMapWritesTable) {
  ASSERT_EQ(Call({"regime-map", "--umax", "2", "--grid", "6x11", "--t-range",
                  "0.05:5", "--r0-range", "0:5", "--out", Path("map.csv")}),
            0)
      << err_.str();
  const auto rows = ReadCsv(ReadFile(Path("map.csv")));
  ASSERT_EQ(rows.size(), 67u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"T", "r0", "label"}));
  EXPECT_EQ(rows[1][2], "Z");
  EXPECT_NE(Call({"regime-map", "--grid", "6by11", "--out", Path("m.csv")}),
            0);
  EXPECT_NE(err_.str().find("grid"), std::string::npos);
}

TEST_F(CliTest, VerifyEmptyListSucceeds) {
  std::ofstream(Path("empty.csv")) << "alpha,beta,n,sigma2,umax,r0,horizon\n";
  ASSERT_EQ(Call({"verify", "--instances", Path("empty.csv"), "--out",
                  Path("report.csv")}),
            0)
      << err_.str();
  EXPECT_NE(ReadFile(Path("report.csv")).find("# summary passed=0 failed=0"),
            std::string::npos);
}

TEST_F(CliTest, VerifyDetectsPerturbedSwitch) {
  std::ofstream(Path("list.csv"))
      << "# two instances\n"
         "alpha,beta,n,sigma2,umax,r0,horizon\n"
         "1,1,1,1,2,1,20\n"
         "1,1,1,1,0.5,10,3\n";
  const std::vector<std::string> base = {
      "verify", "--instances", Path("list.csv"), "--dp-time", "800",
      "--dp-state", "801", "--out", Path("report.csv")};
  ASSERT_EQ(Call(base), 0) << err_.str();
  EXPECT_NE(out_.str().find("passed 2/2"), std::string::npos);

  auto perturbed = base;
  perturbed.insert(perturbed.end(), {"--perturb-switch=-0.1"});
  // Ending the singular dwell 2 time units early raises the cost by 5%.
  EXPECT_EQ(Call(perturbed), 1);
  const auto rows = ReadCsv(ReadFile(Path("report.csv")));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].back(), "fail");
}

TEST_F(CliTest, VerifyRejectsMalformedList) {
  std::ofstream(Path("bad.csv")) << "alpha,beta\n1,1\n";
  EXPECT_NE(Call({"verify", "--instances", Path("bad.csv"), "--out",
                  Path("report.csv")}),
            0);
  EXPECT_FALSE(err_.str().empty());
}

}  // namespace
}  // namespace clocksync::cli
