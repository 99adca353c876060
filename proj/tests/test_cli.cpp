#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "test_support.hpp"

namespace dynfilter {
namespace {

struct Outcome {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

Outcome run(const std::string& args, const std::filesystem::path& scratch) {
  const auto log = scratch / "cli.log";
  const std::string cmd = std::string(DYNFILTER_EXE) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  o.output = ss.str();
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  testing::TempDir dir{"cli"};

  std::filesystem::path scene(const std::string& body) {
    const auto p = dir.path() / "scene.cfg";
    std::ofstream(p) << body;
    return p;
  }
  Outcome simulate(const std::string& body, const std::string& name) {
    return run("simulate --scene " + q(scene(body)) + " --output " + q(dir.path() / name), dir.path());
  }
};

TEST_F(Cli, SimulateThenRunWritesEveryOutput) {
  ASSERT_EQ(simulate("preset=dynamic\nframes=20\nnoise=0.2\n", "data").exit_code, 0);
  const auto out = dir.path() / "out";
  const auto r = run("run --dataset " + q(dir.path() / "data") + " --output " + q(out) +
                         " --epipolar-threshold 0.6",
                     dir.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* name : {"trajectory.txt", "reports.jsonl", "metrics.json", "residuals.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(out / name)) << name;
  }
  const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(metrics.at("n_pairs"), 20);
  EXPECT_TRUE(metrics.at("ate_rmse").is_number());
  EXPECT_TRUE(metrics.at("classification").at("precision").is_number());

  std::ifstream reports(out / "reports.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(reports, line)) {
    EXPECT_TRUE(nlohmann::json::parse(line).contains("n_dynamic"));
    ++lines;
  }
  EXPECT_EQ(lines, 20);
}

TEST_F(Cli, ConfigFileAndFlagsCombine) {
  ASSERT_EQ(simulate("preset=unknown_object\nframes=8\n", "data").exit_code, 0);
  const auto cfg = dir.path() / "run.cfg";
  std::ofstream(cfg) << "dataset=" << (dir.path() / "data").string() << "\nfilter=unknown=off\n";
  const auto out = dir.path() / "out";
  const auto r = run("run --config " + q(cfg) + " --output " + q(out) + " --filter things=off", dir.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(std::filesystem::exists(out / "trajectory.txt"));
}

TEST_F(Cli, MissingMasksDirectoryIsNamed) {
  ASSERT_EQ(simulate("preset=static\nframes=4\n", "data").exit_code, 0);
  const auto missing = dir.path() / "no_such_masks";
  const auto r = run("run --dataset " + q(dir.path() / "data") + " --masks " + q(missing) + " --output " +
                         q(dir.path() / "out"),
                     dir.path());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find(missing.string()), std::string::npos) << r.output;
}

TEST_F(Cli, BadInputsFailWithUsageOrDataCodes) {
  EXPECT_EQ(simulate("preset=static\nframes=1\n", "bad").exit_code, 2);
  EXPECT_EQ(simulate("preset=static\nwarp=9\n", "bad").exit_code, 2);
  EXPECT_EQ(run("run --dataset " + q(dir.path()) + " --epipolar-threshold -1", dir.path()).exit_code, 2);
  EXPECT_EQ(run("frobnicate", dir.path()).exit_code, 2);
  EXPECT_EQ(run("run --dataset " + q(dir.path() / "absent"), dir.path()).exit_code, 3);
}

TEST_F(Cli, FixedSeedGivesByteIdenticalDatasets) {
  ASSERT_EQ(run("simulate --preset ablation --seed 9 --output " + q(dir.path() / "a"), dir.path()).exit_code, 0);
  ASSERT_EQ(run("simulate --preset ablation --seed 9 --output " + q(dir.path() / "b"), dir.path()).exit_code, 0);
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir.path() / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir.path() / "a");
    ASSERT_TRUE(std::filesystem::exists(dir.path() / "b" / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(dir.path() / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 100u);
}

TEST_F(Cli, EvalScoresTrajectories) {
  ASSERT_EQ(simulate("preset=static\nframes=10\n", "data").exit_code, 0);
  const auto gt = dir.path() / "data" / "groundtruth.txt";
  const auto r = run("eval --estimate " + q(gt) + " --ground-truth " + q(gt) + " --align se3", dir.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_LT(j.at("ate_rmse").get<double>(), 1e-12);
  EXPECT_EQ(j.at("mode"), "se3");

  const auto broken = dir.path() / "broken.txt";
  std::ofstream(broken) << "0 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 1\n";
  const auto bad = run("eval --estimate " + q(broken) + " --ground-truth " + q(gt), dir.path());
  EXPECT_NE(bad.exit_code, 0);
  EXPECT_NE(bad.output.find("broken.txt:2"), std::string::npos) << bad.output;
}

TEST_F(Cli, AblationNeedsGroundTruth) {
  ASSERT_EQ(simulate("preset=static\nframes=6\n", "data").exit_code, 0);
  std::filesystem::remove(dir.path() / "data" / "groundtruth.txt");
  const auto r = run("ablate --dataset " + q(dir.path() / "data") + " --output " + q(dir.path() / "out"), dir.path());
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.output.find("groundtruth.txt"), std::string::npos) << r.output;
}

TEST_F(Cli, AblationOfAStaticSceneAgrees) {
  ASSERT_EQ(simulate("preset=static\nobjects=0\nframes=20\nnoise=0.3\n", "data").exit_code, 0);
  const auto out = dir.path() / "out";
  const auto r = run("ablate --dataset " + q(dir.path() / "data") + " --output " + q(out) +
                         " --epipolar-threshold 0.9",
                     dir.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream csv(out / "ablation.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "configuration,people,things,unknown,ate_rmse,n_pairs,lost_frames");
  std::vector<double> ates;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string field;
    for (int i = 0; i < 5; ++i) std::getline(ss, field, ',');
    ates.push_back(std::stod(field));
  }
  ASSERT_EQ(ates.size(), 4u);
  const auto [lo, hi] = std::minmax_element(ates.begin(), ates.end());
  EXPECT_LE(*hi, 1.2 * *lo + 1e-12);
}

}  // namespace
}  // namespace dynfilter
