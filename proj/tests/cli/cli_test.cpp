#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("meritcurve_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const json& j) {
    const auto p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  int run(const std::string& sub, const fs::path& config, const std::string& out, const std::string& extra = "") {
    const std::string cmd = std::string(MERITCURVE_CLI) + " " + sub + " --config " + config.string() + " --out " +
                            (dir_ / out).string() + " " + extra + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
  }

  std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

json linear_storage() {
  return {{"gamma", {{"type", "linear"}, {"hour1", {{"a", 100}, {"b", 1}}}, {"hour2", {{"a", 200}, {"b", 1}}}}},
          {"errors",
           {{"hour1", {{"family", "gaussian"}, {"params", {0, 20}}}},
            {"hour2", {{"family", "laplace"}, {"params", {0, 15}}}}}},
          {"q_max", 1000},
          {"draws", 500},
          {"x", {0, 0}}};
}

}  // namespace

TEST_F(Cli, LinearFixtureReproducesClosedForm) {
  ASSERT_EQ(run("optimize-storage", write("c.json", linear_storage()), "out"), 0);
  const auto r = read_json(dir_ / "out/revenue_report.json");
  EXPECT_NEAR(r["point"]["q"].get<double>(), 25.0, 1e-8);
  EXPECT_NEAR(r["point"]["revenue"].get<double>(), 1250.0, 1e-9);
  EXPECT_EQ(r["point"]["regime"], "interior");
  EXPECT_TRUE(r["dominance"]["pointwise"].get<bool>());
  EXPECT_TRUE(fs::exists(dir_ / "out/optimize-storage.manifest.json"));
}

TEST_F(Cli, UnknownKeyIsAValidationError) {
  auto c = linear_storage();
  c["q_maxx"] = 10;
  EXPECT_EQ(run("optimize-storage", write("c.json", c), "out"), 2);
  c = linear_storage();
  c["gamma"]["hour1"]["slope"] = 3;
  EXPECT_EQ(run("optimize-storage", write("c.json", c), "out"), 2);
  EXPECT_FALSE(fs::exists(dir_ / "out/revenue_report.json"));
}

TEST_F(Cli, BadArgumentsAreValidationErrors) {
  EXPECT_EQ(run("optimize-storage", write("c.json", {{"gamma", 1}}), "out"), 2);
  EXPECT_EQ(run("no-such-command", write("c.json", json::object()), "out"), 2);
  std::ofstream(dir_ / "broken.json") << "{ not json";
  EXPECT_EQ(run("optimize-storage", dir_ / "broken.json", "out"), 2);
}

TEST_F(Cli, MissingInputIsADataErrorWithoutPartialOutputs) {
  ASSERT_EQ(run("synth-data", write("s.json", {{"days", 20}, {"seed", 3}}), "data"), 0);
  const json fit{{"side", "demand"}, {"curves", "data/curves_demand.csv"}};
  EXPECT_EQ(run("fit-curves", write("f.json", fit), "fit"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "fit/hourly_median.csv"));
  // 24 hourly medians plus the header.
  EXPECT_EQ(std::count(std::istreambuf_iterator<char>(std::ifstream(dir_ / "fit/hourly_median.csv").rdbuf()), {}, '\n'), 25);

  const json missing{{"side", "demand"}, {"curves", "data/nope.csv"}};
  EXPECT_EQ(run("fit-curves", write("m.json", missing), "fail"), 3);
  EXPECT_FALSE(fs::exists(dir_ / "fail") && !fs::is_empty(dir_ / "fail"));
}

TEST_F(Cli, ForecastHorizonBeyondDataIsRejected) {
  ASSERT_EQ(run("synth-data", write("s.json", {{"days", 20}, {"sides", {"demand"}}}), "data"), 0);
  const json f{{"side", "demand"},
               {"curves", "data/curves_demand.csv"},
               {"features", "data/features_demand.csv"},
               {"test_days", 30}};
  EXPECT_EQ(run("forecast", write("f.json", f), "fc"), 2);
}

TEST_F(Cli, GenerateWithoutModelFailsCleanly) {
  ASSERT_EQ(run("synth-data", write("s.json", {{"days", 3}, {"sides", {"supply"}}}), "data"), 0);
  const json g{{"side", "supply"},
               {"model_dir", "missing_model"},
               {"features", "data/features_supply.csv"},
               {"orderbooks", "data/orderbooks.csv"},
               {"day", "2020-01-02"}};
  EXPECT_EQ(run("generate", write("g.json", g), "gen"), 3);
  EXPECT_FALSE(fs::exists(dir_ / "gen/generated_curves.csv"));
}

TEST_F(Cli, GenerateZeroSamplesWritesHeaderOnly) {
  ASSERT_EQ(run("synth-data", write("s.json", {{"days", 4}, {"sides", {"supply"}}}), "data"), 0);
  ASSERT_EQ(run("encode-orders", write("e.json", {{"side", "supply"}, {"curves", "data/curves_supply.csv"}}), "data"),
            0);
  const json t{{"side", "supply"},
               {"orderbooks", "data/orderbooks.csv"},
               {"features", "data/features_supply.csv"},
               {"steps", 20},
               {"intensity", {{"epochs", 2}, {"hidden", {8}}}},
               {"marks", {{"epochs", 1}, {"hidden", {8}}}}};
  ASSERT_EQ(run("train-ddpm", write("t.json", t), "model"), 0);
  json g{{"side", "supply"},
         {"model_dir", "model"},
         {"features", "data/features_supply.csv"},
         {"orderbooks", "data/orderbooks.csv"},
         {"day", "2020-01-03"},
         {"samples", 0}};
  ASSERT_EQ(run("generate", write("g.json", g), "gen"), 0);
  EXPECT_EQ(read_text(dir_ / "gen/generated_curves.csv"), "sample,day,hour,price,volume\n");
  g["samples"] = 2;
  ASSERT_EQ(run("generate", write("g.json", g), "gen2", "--seed 9"), 0);
  ASSERT_EQ(run("generate", write("g.json", g), "gen3", "--seed 9"), 0);
  EXPECT_EQ(read_text(dir_ / "gen2/generated_curves.csv"), read_text(dir_ / "gen3/generated_curves.csv"));
  EXPECT_EQ(read_json(dir_ / "gen2/generate.manifest.json")["seed"], 9);
}

TEST_F(Cli, OutputMayNotOverwriteAnInput) {
  ASSERT_EQ(run("synth-data", write("s.json", {{"days", 2}, {"sides", {"supply"}}}), "data"), 0);
  const auto before = read_text(dir_ / "data/curves_supply.csv");
  const json e{{"side", "supply"}, {"curves", "orderbooks.csv"}};
  fs::copy_file(dir_ / "data/curves_supply.csv", dir_ / "data/orderbooks.csv");
  EXPECT_EQ(run("encode-orders", write("data/e.json", e), "data"), 2);
  EXPECT_EQ(read_text(dir_ / "data/orderbooks.csv"), before);
}
