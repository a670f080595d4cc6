#include <gtest/gtest.h>

#include <json.hpp>

#include "bfl/io.hpp"
#include "support/cli_support.hpp"
#include "support/test_support.hpp"

namespace bfl {
namespace {

using testing::run_cli;
using testing::slurp;
using testing::tree_contents;

const char* kGenerator = R"({
  "seed": 4,
  "generator": {
    "C": 3, "K": 2, "p": 6, "heterogeneity": 0.4,
    "domains": [{"id": "north", "n": 90, "pi": [0.5, 0.3, 0.2]},
                {"id": "south", "n": 90, "pi": [0.2, 0.4, 0.4]}],
    "target": {"n": 60, "pi": [0.3, 0.3, 0.4], "lambda": [0.5, 0.5, 0.5, 0.5, 0.5, 0.5]}
  }
})";

const char* kRun = R"({
  "seed": 9,
  "seeds": [1, 2],
  "paths": {"causes": "causes.txt", "symptoms": "symptoms.txt",
            "datasets": ["north.csv", "south.csv"], "target": "target.csv",
            "summary_dir": "models"},
  "base_model": {"K": 2, "iterations": 200, "burn_in": 100},
  "ensemble": {"chains": 3, "iterations": 200, "burn_in": 100},
  "calibration": {"chains": 2, "iterations": 200, "burn_in": 100},
  "lodo": {"methods": ["bfl_plain", "bfl_mix", "local_avg", "gbql_50"]}
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_file_atomic(dir / "gen.json", kGenerator);
    ASSERT_EQ(run_cli("--config " + (dir / "gen.json").string() + " --out " + (dir / "sim").string() + " simulate"), 0);
    write_file_atomic(dir / "sim" / "run.json", kRun);
    run = (dir / "sim" / "run.json").string();
    ASSERT_EQ(run_cli("--config " + run + " --out " + (dir / "sim" / "models").string() + " train"), 0);
  }
  std::string out(const std::string& name) const { return (dir / name).string(); }

  testing::TempDir dir;
  std::string run;
};

TEST_F(CliTest, SimulateAndTrainOutputs) {
  for (const char* f : {"causes.txt", "symptoms.txt", "north.csv", "south.csv", "target.csv", "ledger.json", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "sim" / f)) << f;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "sim" / "models" / "north.summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sim" / "models" / "south.summary.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "sim" / "models" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_TRUE(manifest["files"].contains("north.summary.json"));
  EXPECT_FALSE(manifest["config"].contains("workers"));
}

TEST_F(CliTest, EnsembleIsByteIdenticalAcrossWorkers) {
  for (const char* variant : {"plain", "domain"}) {
    const std::string v = std::string(" ensemble --variant ") + variant;
    ASSERT_EQ(run_cli("--config " + run + " --workers 1 --out " + out("e1") + v), 0);
    ASSERT_EQ(run_cli("--config " + run + " --workers 4 --out " + out("e4") + v), 0);
    ASSERT_EQ(run_cli("--config " + run + " --workers 1 --out " + out("again") + v), 0);
    const auto a = tree_contents(dir / "e1");
    EXPECT_EQ(a, tree_contents(dir / "e4"));
    EXPECT_EQ(a, tree_contents(dir / "again"));
    EXPECT_EQ(a.count("local_model.summary.json"), std::string(variant) == "domain" ? 1u : 0u);
    EXPECT_EQ(a.at("pi.csv").substr(0, a.at("pi.csv").find('\n')), "cause,csmf,pi_mean,pi_q025,pi_q975,rhat");
  }
}

TEST_F(CliTest, ClassifyReproducesEnsembleAssignments) {
  ASSERT_EQ(run_cli("--config " + run + " --out " + out("ens") + " ensemble"), 0);
  ASSERT_EQ(run_cli("--config " + run + " --out " + out("cls") + " classify --posterior " + out("ens") + "/posterior.json"), 0);
  EXPECT_EQ(slurp(dir / "cls" / "deaths.csv"), slurp(dir / "ens" / "deaths.csv"));

  ASSERT_EQ(run_cli("--config " + run + " --out " + out("ensd") + " ensemble --variant domain"), 0);
  EXPECT_EQ(run_cli("--config " + run + " --out " + out("clsd") + " classify --posterior " + out("ensd") + "/posterior.json"), 0);
}

TEST_F(CliTest, CalibrateLodoAndReport) {
  ASSERT_EQ(run_cli("--config " + run + " --out " + out("cal") + " calibrate --beta-rate 50"), 0);
  const auto cal = nlohmann::json::parse(slurp(dir / "cal" / "calibration.json"));
  EXPECT_EQ(cal["prior"]["gamma_prior_mean"], 0.1);

  ASSERT_EQ(run_cli("--config " + run + " --workers 1 --out " + out("l1") + " lodo"), 0);
  ASSERT_EQ(run_cli("--config " + run + " --workers 3 --out " + out("l3") + " lodo"), 0);
  EXPECT_EQ(tree_contents(dir / "l1"), tree_contents(dir / "l3"));
  ASSERT_EQ(run_cli("--config " + run + " --out " + out("rep") + " report --input " + out("l1") + "/report.csv"), 0);
  const auto from_lodo = nlohmann::json::parse(slurp(dir / "l1" / "summary.json"));
  const auto from_csv = nlohmann::json::parse(slurp(dir / "rep" / "summary.json"));
  EXPECT_EQ(from_csv["overall"], from_lodo["overall"]);
}

TEST_F(CliTest, ExportIsCanonical) {
  const auto src = dir / "sim" / "models" / "north.summary.json";
  ASSERT_EQ(run_cli("--config " + run + " --out " + out("exp") + " export --summary " + src.string()), 0);
  EXPECT_EQ(slurp(dir / "exp" / "north.summary.json"), slurp(src));
}

TEST(CliExit, Codes) {
  testing::TempDir dir;
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "missing.json").string() + " train"), 1);
  write_file_atomic(dir / "bad.json", "{\"colour\": 1}");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " train"), 1);
  write_file_atomic(dir / "hyper.json", "{\"base_model\": {\"K\": 0}}");
  EXPECT_EQ(run_cli("--config " + (dir / "hyper.json").string() + " train"), 1);
  write_file_atomic(dir / "gen.json", "{\"generator\": {\"C\": 1}}");
  EXPECT_EQ(run_cli("--config " + (dir / "gen.json").string() + " --out " + (dir / "o").string() + " simulate"), 1);
  write_file_atomic(dir / "io.json", R"({"paths": {"causes": "nope.txt", "symptoms": "nope.txt", "datasets": ["x.csv"]}})");
  EXPECT_EQ(run_cli("--config " + (dir / "io.json").string() + " train"), 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "o"));
}

}  // namespace
}  // namespace bfl
