#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "json.hpp"
#include "mvdwls/cli.hpp"
#include "test_support.hpp"

namespace {

using namespace mvdwls;
using namespace mvdwls::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testsupport::scratch_dir("cli"); }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    simlab::write_file(p, text);
    return p;
  }

  fs::path scenario_csv(simlab::VarianceForm form, int n, std::uint64_t seed, const std::string& name) const {
    simlab::SimScenario s;
    s.form = form;
    s.n = n;
    s.seed = seed;
    const auto p = dir_ / name;
    write_csv(simlab::gen_scenario(s, 0), p);
    return p;
  }

  CliConfig config(const std::string& out) const {
    CliConfig c;
    c.output_dir = dir_ / out;
    c.seed = 7;
    return c;
  }

  fs::path dir_;
};

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

TEST_F(CliTest, LoadsThreeColumnCsv) {
  const auto p = write("a.csv", "u,v,target\n1,2,3\n2,1,5\n3,4,4\n4,3,9\n5,5,8\n");
  const auto loaded = load_csv(p, {});
  EXPECT_EQ(loaded.data.n(), 5);
  EXPECT_EQ(loaded.data.X().cols(), 3);
  EXPECT_EQ(loaded.data.names(), (std::vector<std::string>{"(Intercept)", "u", "v"}));
  EXPECT_EQ(loaded.data.response_name(), "target");
  EXPECT_EQ(loaded.data.y()(3), 9.0);
  EXPECT_FALSE(loaded.transform.applied);

  CliConfig by_name;
  by_name.response_column = "u";
  by_name.feature_columns = {"target"};
  const auto other = load_csv(p, by_name);
  EXPECT_EQ(other.data.y()(1), 2.0);
  EXPECT_EQ(other.data.p(), 1);
  CliConfig by_index;
  by_index.response_column = "0";
  EXPECT_EQ(load_csv(p, by_index).data.y(), other.data.y());
}

TEST_F(CliTest, LoadErrors) {
  EXPECT_EQ(code_of([&] { load_csv(dir_ / "missing.csv", {}); }), ErrorCode::FileNotFound);
  const auto p = write("b.csv", "a,b,y\n1,2,3\n2,3,4\n3,5,5\n4,1,1\n");
  CliConfig cfg;
  cfg.response_column = "nope";
  EXPECT_EQ(code_of([&] { load_csv(p, cfg); }), ErrorCode::MissingColumn);
  const auto bad = write("c.csv", "a,b,y\n1,2,3\n2,x,4\n3,5,5\n4,1,1\n");
  try {
    load_csv(bad, {});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonNumericCell);
    EXPECT_EQ(e.index(), 2);
  }
}

TEST_F(CliTest, BlankCellNamesRow) {
  std::string text = "a,b,y\n";
  for (int r = 1; r <= 10; ++r) {
    text += std::to_string(r) + "," + (r == 7 ? std::string() : std::to_string(r * r % 7)) + "," +
            std::to_string(2 * r + 1) + "\n";
  }
  try {
    load_csv(write("blank.csv", text), {});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_EQ(e.index(), 7);
    EXPECT_NE(std::string(e.what()).find("row(s) 7"), std::string::npos) << e.what();
  }
}

TEST_F(CliTest, CsvRoundTrip) {
  simlab::SimScenario s;
  s.n = 40;
  s.seed = 3;
  const auto data = simlab::gen_scenario(s, 0);
  const auto p = dir_ / "rt.csv";
  write_csv(data, p);
  const auto back = load_csv(p, {}).data;
  EXPECT_LE((back.X() - data.X()).cwiseAbs().maxCoeff(), 1e-15 * data.X().cwiseAbs().maxCoeff());
  EXPECT_LE((back.y() - data.y()).cwiseAbs().maxCoeff(), 1e-15 * data.y().cwiseAbs().maxCoeff());
  EXPECT_EQ(back.names(), data.names());
}

TEST_F(CliTest, StandardizationIsRecorded) {
  const auto p = scenario_csv(simlab::VarianceForm::S1, 30, 1, "s.csv");
  CliConfig cfg;
  cfg.standardize = true;
  const auto raw = load_csv(p, {});
  const auto z = load_csv(p, cfg);
  ASSERT_TRUE(z.transform.applied);
  EXPECT_NEAR(z.data.y().mean(), 0.0, 1e-12);
  const VectorXd back = z.transform.y_mean + z.transform.y_sd * z.data.y().array();
  EXPECT_LE((back - raw.data.y()).cwiseAbs().maxCoeff(), 1e-12 * raw.data.y().cwiseAbs().maxCoeff());
  ASSERT_EQ(z.transform.feature_sd.size(), 2u);
  EXPECT_NEAR(z.data.X()(4, 1) * z.transform.feature_sd[0], raw.data.X()(4, 1), 1e-12);
}

TEST_F(CliTest, FitReportsDirectionOnScenarioOne) {
  const auto p = scenario_csv(simlab::VarianceForm::S1, 90, 11, "s1.csv");
  std::ostringstream console;
  const auto out = cmd_fit(p, config("fit"), console);
  const auto report = json::parse(out.json);
  EXPECT_EQ(report["schema_version"], 1);
  const auto& m2 = report["models"]["M2"];
  const double ratio = m2["k_ratio"];
  EXPECT_NEAR(ratio, m2["k"][1].get<double>() / m2["k"][0].get<double>(), 1e-12 * std::abs(ratio));
  EXPECT_GT(ratio, 0.0);
  EXPECT_GE(m2["rs_abs"].get<double>(), 0.05);
  EXPECT_EQ(report["spearman"].size(), 2u);
  EXPECT_TRUE(fs::exists(out.overlay_svg));
  EXPECT_EQ(testsupport::read_file(out.report_json), out.json);
  EXPECT_NE(console.str().find("M2"), std::string::npos);
}

TEST_F(CliTest, FitOnHomoscedasticInputFallsBack) {
  auto g = testsupport::stream(5);
  MatrixXd regs(80, 2);
  regs << testsupport::uniform(g, 80, 1, 10), testsupport::uniform(g, 80, 1, 10);
  const VectorXd y = (1.0 + regs.col(0).array() + 2.0 * regs.col(1).array()).matrix() + testsupport::normal(g, 80);
  const auto p = dir_ / "homo.csv";
  write_csv(Dataset::from_regressors(y, regs), p);
  std::ostringstream console;
  const auto report = json::parse(cmd_fit(p, config("homo"), console).json);
  EXPECT_GT(report["white_test"]["p_value"].get<double>(), 0.05);
  EXPECT_TRUE(report["homoscedastic_fallback"].get<bool>());
  EXPECT_EQ(report["recommended"], "OLS");
  EXPECT_EQ(report["ols"]["beta"].size(), 3u);
  EXPECT_NE(console.str().find("OLS"), std::string::npos);
}

TEST_F(CliTest, FitListsOneSpearmanRowPerFeature) {
  auto g = testsupport::stream(6);
  constexpr int n = 31;
  MatrixXd regs(n, 3);
  for (int j = 0; j < 3; ++j) regs.col(j) = testsupport::uniform(g, n, 1, 10);
  const VectorXd y = regs.rowwise().sum() + testsupport::normal(g, n).cwiseProduct(0.2 * regs.rowwise().sum());
  const auto p = dir_ / "three.csv";
  write_csv(Dataset::from_regressors(y, regs, {"x1", "x2", "x3"}), p);
  auto cfg = config("three");
  cfg.standardize = true;
  std::ostringstream console;
  const auto report = json::parse(cmd_fit(p, cfg, console).json);
  ASSERT_EQ(report["spearman"].size(), 3u);
  for (const auto& row : report["spearman"]) {
    const double pv = row["p_value"];
    EXPECT_GE(pv, 0.0);
    EXPECT_LE(pv, 1.0);
    EXPECT_TRUE(row.contains("r_s"));
  }
  EXPECT_EQ(report["spearman"][2]["variable"], "x3");
}

TEST_F(CliTest, FitIsDeterministicAndLeavesInputAlone) {
  const auto p = scenario_csv(simlab::VarianceForm::S3, 60, 4, "s3.csv");
  const auto before = testsupport::read_file(p);
  std::ostringstream console;
  const auto a = cmd_fit(p, config("d1"), console);
  const auto b = cmd_fit(p, config("d2"), console);
  EXPECT_EQ(a.json, b.json);
  EXPECT_EQ(testsupport::read_file(a.overlay_svg), testsupport::read_file(b.overlay_svg));
  EXPECT_EQ(testsupport::read_file(p), before);
}

TEST_F(CliTest, SimulateScenarioTwoBias) {
  SimulateOptions opt;
  opt.scenario = 2;
  opt.n = 30;
  opt.replications = 100;
  std::ostringstream console;
  const auto reports = cmd_simulate(opt, config("sim"), console);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_LT(reports[0].m1.bias_abs(1), 0.02);
  EXPECT_LT(reports[0].m2.bias_abs(1), 0.02);
  for (const char* f : {"table1_3.csv", "table4.csv", "fig1.csv"}) EXPECT_TRUE(fs::exists(dir_ / "sim" / f));
}

TEST_F(CliTest, SimulateIsDeterministic) {
  SimulateOptions opt;
  opt.scenario = 1;
  opt.n = 30;
  opt.replications = 10;
  std::ostringstream console;
  cmd_simulate(opt, config("r1"), console);
  cmd_simulate(opt, config("r2"), console);
  for (const auto& entry : fs::directory_iterator(dir_ / "r1")) {
    EXPECT_EQ(testsupport::read_file(entry.path()), testsupport::read_file(dir_ / "r2" / entry.path().filename()))
        << entry.path().filename();
  }
}

TEST_F(CliTest, SimulateRejectsZeroReplications) {
  SimulateOptions opt;
  opt.scenario = 1;
  opt.replications = 0;
  std::ostringstream console;
  try {
    cmd_simulate(opt, config("zero"), console);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e), kExitUsage);
  }
}

TEST_F(CliTest, CrossvalOutputs) {
  const auto p = scenario_csv(simlab::VarianceForm::S3, 60, 9, "cv.csv");
  std::ostringstream console;
  const auto one = cmd_crossval(p, 1, config("cv1"), console);
  EXPECT_EQ(one.repeats, 1);
  const auto rows = testsupport::read_file(dir_ / "cv1" / "cv.csv");
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 2);
  cmd_crossval(p, 5, config("cva"), console);
  cmd_crossval(p, 5, config("cvb"), console);
  EXPECT_EQ(testsupport::read_file(dir_ / "cva" / "cv.csv"), testsupport::read_file(dir_ / "cvb" / "cv.csv"));
  EXPECT_EQ(testsupport::read_file(dir_ / "cva" / "cv_summary.json"),
            testsupport::read_file(dir_ / "cvb" / "cv_summary.json"));
  EXPECT_NE(console.str().find("Lower mean SSE"), std::string::npos) << console.str();
}

TEST_F(CliTest, CrossvalTooSmall) {
  const auto p = write("tiny.csv", "a,b,y\n1,2,3\n2,3,4\n3,5,5\n4,1,1\n5,5,2\n");
  std::ostringstream console;
  EXPECT_EQ(code_of([&] { cmd_crossval(p, 3, config("tiny"), console); }), ErrorCode::SplitTooSmall);
}

TEST(ExitCodes, FamiliesAreDistinct) {
  EXPECT_EQ(exit_code_for(Error(ErrorCode::InvalidArgument, "")), kExitUsage);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::FileNotFound, "")), kExitInput);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::ParseError, "")), kExitInput);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::SingularDesign, "")), kExitData);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::NoRootInInterval, "")), kExitEstimation);
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(MVDWLS_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliTest, ToolExitCodes) {
  const auto out = (dir_ / "tool").string();
  EXPECT_EQ(run_tool("simulate --scenario 1 --replications 0 --output-dir " + out), kExitUsage);
  EXPECT_EQ(run_tool("fit --input " + (dir_ / "none.csv").string() + " --output-dir " + out), kExitInput);
  EXPECT_EQ(run_tool("fit --bogus"), kExitUsage);
  EXPECT_EQ(run_tool("simulate --scenario 1 --n 20 --replications 2 --output-dir " + out), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "tool" / "table4.csv"));
}

TEST_F(CliTest, ToolReadsConfigFile) {
  const auto p = scenario_csv(simlab::VarianceForm::S1, 40, 2, "cfg.csv");
  const auto ini = write("run.ini", "[fit]\ninput = \"" + p.string() + "\"\nseed = 5\n");
  const auto out = (dir_ / "cfgout").string();
  EXPECT_EQ(run_tool("--config " + ini.string() + " fit --output-dir " + out), kExitOk);
  const auto report = json::parse(testsupport::read_file(dir_ / "cfgout" / "report.json"));
  EXPECT_EQ(report["seed"], 5);
}

}  // namespace
