#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using namespace vpace;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vpace_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return cli::run_cli(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(Cli, GenGridWritesInstanceAndManifest) {
  ASSERT_EQ(run({"gen", "grid", "--out", path("grid.json")}), cli::kOk);
  const auto inst = io::load_instance(path("grid.json"));
  EXPECT_EQ(inst, gen_grid_instance());
  const auto manifest = io::parse(io::read_file(path("grid.json.manifest.json")), "manifest");
  EXPECT_EQ(manifest.at("command"), "gen grid");
  EXPECT_EQ(manifest.at("instance_digest"), instance_digest(inst));
  EXPECT_EQ(manifest.at("tool_version"), kToolVersion);
}

TEST_F(Cli, GenArcHonoursArguments) {
  ASSERT_EQ(run({"gen", "arc", "--a", "2", "--b", "3", "--count", "40", "--out", path("arc.json"), "--manifest",
                 path("m.json")}),
            cli::kOk);
  EXPECT_EQ(io::load_instance(path("arc.json")), gen_arc_instance(2.0, 3.0, 40));
  EXPECT_TRUE(fs::exists(path("m.json")));
  EXPECT_EQ(run({"gen", "arc", "--a", "3", "--b", "2", "--out", path("bad.json")}), cli::kValidation);
}

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run({}), cli::kValidation);
  EXPECT_EQ(run({"frobnicate"}), cli::kValidation);
  EXPECT_EQ(run({"solve"}), cli::kValidation);
  EXPECT_EQ(run({"solve", "--instance", path("missing.json")}), cli::kValidation);
  EXPECT_NE(err_.str().find("missing.json"), std::string::npos);
}

TEST_F(Cli, MalformedInstanceExitsWithOne) {
  io::write_file(path("bad.json"), "{\"n\": 2}");
  EXPECT_EQ(run({"solve", "--instance", path("bad.json")}), cli::kValidation);
  auto j = io::to_json(gen_grid_instance());
  j["buyers"][3]["probability"] = 0.5;
  io::write_file(path("mass.json"), io::dump(j));
  EXPECT_EQ(run({"solve", "--instance", path("mass.json")}), cli::kValidation);
  EXPECT_NE(err_.str().find("probability mass"), std::string::npos);
}

TEST_F(Cli, SolveCheckSimulateExport) {
  ASSERT_EQ(run({"gen", "grid", "--out", path("grid.json")}), cli::kOk);
  ASSERT_EQ(run({"solve", "--instance", path("grid.json"), "--out", path("eq.json")}), cli::kOk);
  const auto doc = io::equilibrium_document_from_json(io::parse(io::read_file(path("eq.json")), "eq"));
  EXPECT_TRUE(doc.report.converged);
  const auto manifest = io::parse(io::read_file(path("eq.json.manifest.json")), "manifest");
  EXPECT_EQ(manifest.at("command"), "solve");
  EXPECT_EQ(manifest.at("outcome").at("converged"), true);

  ASSERT_EQ(run({"check", "monotone", "--instance", path("grid.json"), "--profile", path("eq.json")}), cli::kOk);
  const auto mono = io::parse(out_.str(), "stdout");
  EXPECT_EQ(mono.at("kind"), "monotonicity");
  EXPECT_EQ(mono.at("report").at("violations").size(), 0u);

  ASSERT_EQ(run({"check", "budgets", "--instance", path("grid.json"), "--profile", path("eq.json")}), cli::kOk);
  EXPECT_EQ(io::parse(out_.str(), "stdout").at("kind"), "budgets");
  ASSERT_EQ(run({"check", "colinear", "--instance", path("grid.json"), "--profile", path("eq.json")}), cli::kOk);
  EXPECT_EQ(io::parse(out_.str(), "stdout").at("kind"), "colinear");

  ASSERT_EQ(run({"simulate", "--instance", path("grid.json"), "--profile", path("eq.json"), "--format", "fp,sp",
                 "--samples", "2000", "--seed", "4", "--out", path("rev.json")}),
            cli::kOk);
  const auto rev = io::revenue_from_json(io::parse(io::read_file(path("rev.json")), "rev").at("report"));
  EXPECT_EQ(rev.formats.size(), 2u);
  EXPECT_EQ(rev.seed, 4u);

  ASSERT_EQ(run({"export", "--report", path("eq.json"), "--kind", "shading-surface", "--out", path("s.csv")}),
            cli::kOk);
  EXPECT_EQ(io::read_file(path("s.csv")), io::shading_surface_csv(doc.instance, doc.report.profile));
  ASSERT_EQ(run({"export", "--report", path("rev.json"), "--kind", "revenue", "--out", path("r.csv")}), cli::kOk);
  EXPECT_EQ(run({"export", "--report", path("rev.json"), "--kind", "paced-vectors", "--out", path("p.csv")}),
            cli::kValidation);
}

TEST_F(Cli, ProfileMustMatchInstance) {
  ASSERT_EQ(run({"gen", "grid", "--out", path("grid.json")}), cli::kOk);
  io::write_file(path("p.json"), "{\"multipliers\": [0.1, 0.2]}");
  EXPECT_EQ(run({"check", "budgets", "--instance", path("grid.json"), "--profile", path("p.json")}),
            cli::kValidation);
  EXPECT_EQ(run({"simulate", "--instance", path("grid.json"), "--profile", path("p.json"), "--format", "xx"}),
            cli::kValidation);
}

TEST_F(Cli, NonConvergedSolveWarnsButSucceeds) {
  ASSERT_EQ(run({"gen", "grid", "--out", path("grid.json")}), cli::kOk);
  EXPECT_EQ(run({"solve", "--instance", path("grid.json"), "--max-rounds", "1"}), cli::kOk);
  EXPECT_NE(err_.str().find("did not converge"), std::string::npos);
  EXPECT_EQ(io::parse(out_.str(), "stdout").at("report").at("converged"), false);
}
