#include <gtest/gtest.h>

#include <cmath>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tvlap/simcli.hpp"

namespace fs = std::filesystem;
using namespace tvlap;
using namespace tvlap::cli;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tvlap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    args.insert(args.begin(), "tvlap");
    return run_cli(args, out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void write(const std::string& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-1e-20), "-9.9999999999999995e-21");
  for (double v : {0.1, 1.0 / 3.0, 12345.678901234567, -2.5e-300}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(parse_double(" 1.5 "), 1.5);
  EXPECT_EQ(parse_double("1,5"), std::nullopt);
  EXPECT_EQ(parse_double("nan"), std::nullopt);
  EXPECT_EQ(parse_double(""), std::nullopt);
}

TEST(Csv, LenientModeKeepsText) {
  std::istringstream in("n,event\n1,\n2,max\n");
  const CsvTable t = parse_csv(in, "mem", false);
  EXPECT_EQ(t.columns[0], (std::vector<double>{1.0, 2.0}));
  EXPECT_TRUE(std::isnan(t.columns[1][0]));
  EXPECT_EQ(t.text[1], (std::vector<std::string>{"", "max"}));
}

TEST(Csv, ParseReportsLineNumbers) {
  std::istringstream good("time,x\n0,1\n\n1,2\n");
  const CsvTable t = parse_csv(good, "mem");
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.find("x"), 1u);
  std::istringstream bad("time,x\n0,1\n1,abc\n");
  try {
    parse_csv(bad, "mem");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("mem:3"), std::string::npos) << e.what();
  }
  std::istringstream ragged("time,x\n0,1,2\n");
  EXPECT_THROW(parse_csv(ragged, "mem"), UsageError);
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty, "mem"), UsageError);
}

TEST(Config, ParseQ) {
  EXPECT_EQ(parse_q("0.0001", 4, NoiseDriver::G1), (Matrix{{1e-4}}));
  EXPECT_THROW(parse_q("1,2", 4, NoiseDriver::G1), UsageError);
  EXPECT_EQ(parse_q("2", 2, NoiseDriver::G3), 2.0 * Matrix::identity(3));
  const Matrix q = parse_q("0,0,0,90000", 4, NoiseDriver::G3);
  EXPECT_EQ(q(3, 3), 90000.0);
  EXPECT_EQ(q(4, 4), 0.0);
  EXPECT_THROW(parse_q("1,2,3", 1, NoiseDriver::G2), UsageError);
  EXPECT_THROW(parse_q("x", 1, NoiseDriver::G2), UsageError);
}

TEST_F(CliTest, SimulateSine) {
  ASSERT_EQ(run({"simulate", "--scenario", "sine", "--seed", "1", "--out", path("s.csv")}), 0);
  std::ifstream in(path("s.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time,x,truth,truth_d1");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1201);
}

TEST_F(CliTest, SimulateFault) {
  ASSERT_EQ(run({"simulate", "--scenario", "fault", "--jumps", "5", "--mag", "5", "--seed", "2",
                 "--out", path("f.csv")}),
            0);
  const CsvTable t = read_csv(path("f.csv"), false);
  EXPECT_EQ(t.header, (std::vector<std::string>{"time", "channel1", "channel2", "channel3"}));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"simulate", "--scenario", "sine"}), 2);
  EXPECT_EQ(run({"simulate", "--scenario", "nope", "--out", path("x.csv")}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"bogus"}), 2);
  EXPECT_EQ(run({"check", "--g", "g9"}), 2);
  EXPECT_EQ(run({"check", "--k", "13"}), 2);
  EXPECT_EQ(run({"compare", "--trials", "0"}), 2);
  EXPECT_EQ(run({"compare", "--models", "tvlap,arima"}), 2);
  EXPECT_EQ(run({"filter", "--in", path("missing.csv"), "--out", path("o.csv")}), 2);
}

TEST_F(CliTest, FilterRoundTrip) {
  ASSERT_EQ(run({"simulate", "--scenario", "sine", "--seed", "4", "--out", path("s.csv")}), 0);
  ASSERT_EQ(run({"filter", "--in", path("s.csv"), "--out", path("f.csv")}), 0) << err_.str();
  const CsvTable t = read_csv(path("f.csv"), false);
  EXPECT_EQ(t.header, (std::vector<std::string>{"n", "time", "fhat", "d1", "d2", "d3", "d4",
                                                "p00", "event"}));
  EXPECT_EQ(t.rows(), 1201u);
  EXPECT_NE(out_.str().find("trend_mse="), std::string::npos);
  EXPECT_NE(out_.str().find("event max"), std::string::npos);
}

TEST_F(CliTest, FilterConstantInputHasNoEvents) {
  std::string csv = "time,value\n";
  for (int i = 0; i < 300; ++i) csv += std::to_string(i) + ",2.5\n";
  write(path("c.csv"), csv);
  ASSERT_EQ(run({"filter", "--in", path("c.csv"), "--out", path("f.csv")}), 0);
  EXPECT_NE(out_.str().find("events=0"), std::string::npos) << out_.str();
}

TEST_F(CliTest, FilterInputErrors) {
  write(path("bad.csv"), "time,x\n0,1\n0.1,2\n0.2,oops\n");
  EXPECT_EQ(run({"filter", "--in", path("bad.csv"), "--out", path("o.csv")}), 2);
  EXPECT_NE(err_.str().find(":4"), std::string::npos) << err_.str();
  write(path("back.csv"), "time,x\n0,1\n0.2,2\n0.1,3\n");
  EXPECT_EQ(run({"filter", "--in", path("back.csv"), "--out", path("o.csv")}), 2);
  EXPECT_NE(err_.str().find("not strictly increasing"), std::string::npos);
  write(path("ok.csv"), "time,x\n0,1\n1,2\n");
  EXPECT_EQ(run({"filter", "--in", path("ok.csv"), "--out", path("o.csv"), "--k", "1",
                 "--extrema"}),
            2);
  EXPECT_EQ(run({"filter", "--in", path("ok.csv"), "--out", path("o.csv"), "--k", "1"}), 0);
}

TEST_F(CliTest, ForecastOneStepIsTimeUpdate) {
  write(path("d.csv"), "time,x\n0,1\n1,1.5\n2,2.1\n3,2.4\n4,3.2\n");
  ASSERT_EQ(run({"forecast", "--in", path("d.csv"), "--out", path("p.csv"), "--steps", "1"}), 0)
      << err_.str();
  const CsvTable t = read_csv(path("p.csv"), false);
  ASSERT_EQ(t.rows(), 1u);
  const StateSpaceModel m = make_tvlap(TvlapConfig{});
  FilterState s = init_state(5);
  for (double y : {1.0, 1.5, 2.1, 2.4, 3.2}) s = step(m, s, y).state;
  const ForecastPoint f = forecast(m, s, 1).front();
  EXPECT_EQ(t.columns[2][0], f.xhat(0, 0));
  EXPECT_EQ(t.columns[3][0], f.p(0, 0));
  EXPECT_EQ(t.columns[1][0], 5.0);
}

TEST_F(CliTest, ForecastVarianceNondecreasing) {
  ASSERT_EQ(run({"simulate", "--scenario", "sine", "--seed", "1", "--out", path("s.csv")}), 0);
  ASSERT_EQ(run({"forecast", "--in", path("s.csv"), "--out", path("p.csv"), "--steps", "200"}),
            0);
  const CsvTable t = read_csv(path("p.csv"), false);
  ASSERT_EQ(t.rows(), 200u);
  for (std::size_t i = 1; i < t.rows(); ++i) EXPECT_GE(t.columns[3][i], t.columns[3][i - 1]);
  EXPECT_EQ(run({"forecast", "--in", path("s.csv"), "--out", path("p.csv"), "--steps", "0"}), 2);
}

TEST_F(CliTest, CompareSingleLevelTrial) {
  ASSERT_EQ(run({"compare", "--models", "level", "--trials", "1", "--out", path("c.csv")}), 0);
  const CsvTable t = read_csv(path("c.csv"), false);
  EXPECT_EQ(t.header, (std::vector<std::string>{"trial", "seed", "model", "estimation_mse",
                                                "prediction_mse"}));
  EXPECT_EQ(t.rows(), 1u);
}

TEST_F(CliTest, CompareOrderingAndDeterminism) {
  ASSERT_EQ(run({"compare", "--trials", "10", "--out", path("a.csv")}), 0);
  const std::string table = out_.str();
  ASSERT_EQ(run({"compare", "--trials", "10", "--out", path("b.csv")}), 0);
  EXPECT_EQ(out_.str(), table);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  const auto models = std::vector<std::string>{"tvlap", "holt", "level"};
  const auto s = summarize(models, run_comparison(models, 10, 1));
  EXPECT_LT(s[0].best_estimation, s[1].best_estimation);
  EXPECT_LT(s[1].best_estimation, s[2].best_estimation);
  EXPECT_LT(s[0].best_prediction, s[1].best_prediction);
  EXPECT_LT(s[1].best_prediction, s[2].best_prediction);
}

TEST_F(CliTest, DiagnoseFaultScenario) {
  ASSERT_EQ(run({"simulate", "--scenario", "fault", "--seed", "3", "--out", path("f.csv")}), 0);
  ASSERT_EQ(run({"diagnose", "--in", path("f.csv"), "--out", path("d.csv")}), 0) << err_.str();
  const std::string report = out_.str();
  EXPECT_NE(report.find("channel3 variance="), std::string::npos);
  EXPECT_EQ(report.find("channel1 variance=", 0), 0u);
  const CsvTable t = read_csv(path("d.csv"), false);
  ASSERT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.columns[2], (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST_F(CliTest, DiagnoseIdenticalAndTooFewChannels) {
  std::string same = "time,a,b,c\n";
  std::string single = "time,a\n";
  for (int i = 0; i < 200; ++i) {
    const std::string v = format_double(std::sin(0.01 * i));
    same += std::to_string(i) + "," + v + "," + v + "," + v + "\n";
    single += std::to_string(i) + "," + v + "\n";
  }
  write(path("same.csv"), same);
  write(path("single.csv"), single);
  ASSERT_EQ(run({"diagnose", "--in", path("same.csv")}), 0);
  EXPECT_EQ(out_.str().find("FAULTY"), std::string::npos);
  EXPECT_EQ(run({"diagnose", "--in", path("single.csv")}), 2);
}

TEST_F(CliTest, CheckExitCodes) {
  EXPECT_EQ(run({"check", "--k", "4", "--t", "0.1", "--g", "g1"}), 0);
  EXPECT_NE(out_.str().find("observable=true"), std::string::npos);
  EXPECT_EQ(run({"check", "--k", "4", "--zero-g"}), 1);
  EXPECT_EQ(run({"check", "--k", "10", "--t", "0.001"}), 0) << out_.str();
}

TEST_F(CliTest, ConfigFileWithOverrides) {
  write(path("run.cfg"),
        "# check settings\n"
        "k = 2   # order\n"
        "t=0.5\n"
        "\n"
        "g=g3\n"
        "q=1\n");
  ASSERT_EQ(run({"check", "--config", path("run.cfg")}), 0) << err_.str();
  EXPECT_NE(out_.str().find("K=2 T=0.5 driver=g3"), std::string::npos) << out_.str();
  ASSERT_EQ(run({"check", "--config=" + path("run.cfg"), "--k", "3"}), 0);
  EXPECT_NE(out_.str().find("K=3 T=0.5 driver=g3"), std::string::npos) << out_.str();

  write(path("bad.cfg"), "nonsense line\n");
  EXPECT_EQ(run({"check", "--config", path("bad.cfg")}), 2);
  write(path("unknown.cfg"), "colour=blue\n");
  EXPECT_EQ(run({"check", "--config", path("unknown.cfg")}), 2);
  EXPECT_EQ(run({"check", "--config", path("absent.cfg")}), 2);
}

TEST_F(CliTest, SimulateIsByteIdentical) {
  ASSERT_EQ(run({"simulate", "--scenario", "sine_exp", "--seed", "5", "--out", path("a.csv")}), 0);
  ASSERT_EQ(run({"simulate", "--scenario", "sine_exp", "--seed", "5", "--out", path("b.csv")}), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

#ifdef TVLAP_CLI_PATH
TEST_F(CliTest, BinaryExitCodes) {
  const std::string bin = TVLAP_CLI_PATH;
  auto code = [](const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(code(bin + " simulate --scenario sine --out " + path("s.csv")), 0);
  EXPECT_EQ(code(bin + " simulate --scenario sine"), 2);
  EXPECT_EQ(code(bin + " check --k 4 --zero-g"), 1);
  EXPECT_EQ(code(bin + " --help"), 0);
}
#endif
