#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "dkql/dkql.hpp"

using namespace dkql;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dkql_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(DKQL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
    const fs::path dir = scratch("usage");
    EXPECT_EQ(run_cli("", dir / "log"), 2);
    EXPECT_EQ(run_cli("frobnicate", dir / "log"), 2);
    EXPECT_EQ(run_cli("reproduce fig10", dir / "log"), 2);
    EXPECT_EQ(run_cli("evaluate --policy " + (dir / "missing.json").string(), dir / "log"), 2);
    EXPECT_EQ(run_cli("--help", dir / "log"), 0);
    EXPECT_NE(read_file(dir / "log").find("generate"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, ConfigErrorsExitWithTwo) {
    const fs::path dir = scratch("config");
    write_file(dir / "bad.cfg", "n_train = 10\nbogus = 1\n");
    EXPECT_EQ(run_cli("generate --config " + (dir / "bad.cfg").string(), dir / "log"), 2);
    EXPECT_NE(read_file(dir / "log").find("line 2"), std::string::npos);
    write_file(dir / "fixed.cfg", "learner = fixed\nout = " + dir.string() + "\n");
    EXPECT_EQ(run_cli("train --config " + (dir / "fixed.cfg").string(), dir / "log"), 2);
    fs::remove_all(dir);
}

TEST(Cli, IoErrorsExitWithFour) {
    const fs::path dir = scratch("io");
    EXPECT_EQ(run_cli("generate --config " + (dir / "absent.cfg").string(), dir / "log"), 4);
    write_file(dir / "broken.json", "{not json");
    EXPECT_EQ(run_cli("evaluate --policy " + (dir / "broken.json").string(), dir / "log"), 4);
    fs::remove_all(dir);
}

TEST(Cli, GenerateTrainEvaluate) {
    const fs::path dir = scratch("flow");
    write_file(dir / "c.cfg", "n_train = 80\nn_eval = 60\nrepeats = 2\nlambda = 0.01\nsigma = 0.5\nout = " +
                                  dir.string() + "\n");
    const std::string cfg = " --config " + (dir / "c.cfg").string();
    ASSERT_EQ(run_cli("generate" + cfg, dir / "log"), 0);
    EXPECT_EQ(load_trajectories(dir / "dataset.ndjson").size(), 80u);
    ASSERT_EQ(run_cli("train" + cfg + " --data " + (dir / "dataset.ndjson").string(), dir / "log"), 0);
    ASSERT_TRUE(fs::exists(dir / "policies" / "krr.json"));
    ASSERT_EQ(run_cli("evaluate" + cfg + " --policy " + (dir / "policies" / "krr.json").string(), dir / "log"), 0);
    const auto summary = parse_csv(read_file(dir / "summary.csv"));
    ASSERT_EQ(summary.size(), 2u);
    EXPECT_EQ(summary[1][0], "krr");
    ASSERT_EQ(run_cli("complexity" + cfg, dir / "log"), 0);
    EXPECT_NE(read_file(dir / "log").find("m* = "), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, SimulatorMismatchIsConfigError) {
    const fs::path dir = scratch("mismatch");
    write_file(dir / "a.cfg", "n_train = 30\nout = " + dir.string() + "\n");
    ASSERT_EQ(run_cli("generate --config " + (dir / "a.cfg").string(), dir / "log"), 0);
    write_file(dir / "b.cfg", "simulator = sim2\nn_train = 30\nlambda = 0.01\nsigma = 0.5\nout = " + dir.string() + "\n");
    EXPECT_EQ(run_cli("train --config " + (dir / "b.cfg").string() + " --data " + (dir / "dataset.ndjson").string(),
                      dir / "log"),
              2);
    fs::remove_all(dir);
}
