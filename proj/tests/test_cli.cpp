#include "hytask/cli.hpp"
#include "hytask/fixtures.hpp"
#include "hytask/util.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <filesystem>
#include <sstream>

using namespace hytask;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("hytask_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string out_dir() const { return dir.string(); }
    json file(const std::string &name) const { return json::parse(read_text_file((dir / name).string())); }

    fs::path dir;
};

} // namespace

TEST_F(Cli, ValidateAcceptsBundledMission) {
    Result r = run({"validate", "--spec", data_path("vineyard.json")});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(json::parse(r.out)["valid"].get<bool>());
}

TEST_F(Cli, ValidateReportsFieldOnError) {
    json d = json::parse(read_text_file(data_path("m2.json")));
    d["agents"][0]["tasks"][0]["p_success"] = 2.0;
    fs::create_directories(dir);
    std::string path = (dir / "bad.json").string();
    write_text_file(path, d.dump());
    Result r = run({"validate", "--spec", path});
    EXPECT_EQ(r.code, 1);
    json err = json::parse(r.err);
    EXPECT_EQ(err["error"], "spec_error");
    EXPECT_NE(err.dump().find("agents[0].tasks[0].p_success"), std::string::npos);
}

TEST_F(Cli, PlanWritesOutputsAndManifest) {
    Result r = run({"plan", "--spec", data_path("vineyard.json"), "--out", out_dir(), "--pddl"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_DOUBLE_EQ(json::parse(r.out)["travel_cost"].get<double>(), 8.0);
    json m = file("manifest.json");
    EXPECT_EQ(m["subcommand"], "plan");
    EXPECT_TRUE(m["timings_s"].contains("S1"));
    EXPECT_TRUE(fs::exists(dir / "domain.pddl"));
    EXPECT_TRUE(fs::exists(dir / "plan.json"));
}

TEST_F(Cli, VerifyAllOnes) {
    Result r = run({"verify", "--spec", data_path("vineyard.json"), "--plan", data_path("vineyard_plan.json"),
                    "--retries", "{}"});
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_NEAR(j["success_probability"].get<double>(), 0.941480149401, 1e-9);
    EXPECT_FALSE(j["feasible"].get<bool>());
}

TEST_F(Cli, SynthesizeExhaustiveOnM2) {
    Result r = run({"synthesize", "--spec", data_path("m2.json"), "--exhaustive", "--out", out_dir()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["entries"], 4);
    EXPECT_TRUE(fs::exists(dir / "front.csv"));
    EXPECT_EQ(file("archive.json")["entries"].size(), 4u);
}

TEST_F(Cli, ExhaustiveExcludesGaOptions) {
    Result r = run({"synthesize", "--spec", data_path("m2.json"), "--exhaustive", "--evals", "10"});
    EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, SimulateScenario) {
    Result r = run({"simulate", "--spec", data_path("vineyard.json"), "--plan", data_path("vineyard_plan.json"),
                    "--scenario", data_path("adaptation_scenario.json"), "--out", out_dir()});
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_TRUE(j["completed"].get<bool>());
    EXPECT_TRUE(fs::exists(dir / "trace.jsonl"));
}

TEST_F(Cli, BaselineOnM1) {
    Result r = run({"baseline", "--spec", data_path("m1.json"), "--front"});
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_NEAR(j["p_max"].get<double>(), 0.99, 1e-9);
}

TEST_F(Cli, BaselineBudgetIsReported) {
    Result r = run({"baseline", "--spec", data_path("vineyard.json"), "--budget", "100"});
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_TRUE(j["state_budget_exceeded"].get<bool>());
    EXPECT_GE(j["states_reached"].get<std::size_t>(), 100u);
}

TEST_F(Cli, ExportPrism) {
    Result r = run({"export-prism", "--spec", data_path("m2.json"), "--out", out_dir()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "properties.props"));
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"plan"}).code, 2);
    EXPECT_EQ(run({"plan", "--spec", data_path("m2.json"), "--strategy", "dfs"}).code, 2);
}

TEST_F(Cli, MissingFileIsAnError) {
    Result r = run({"plan", "--spec", "/nonexistent/mission.json", "--out", out_dir()});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, SmallBench) {
    Result r = run({"bench", "--tasks", "3", "--agents", "2", "--reps", "1", "--out", out_dir()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "bench.csv"));
}
