#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "hevt/csv.hpp"
#include "hevt/pipeline.hpp"
#include "hevt/simulation.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("hevt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path simulated_sample() {
    hevt::Scenario s = nlohmann::json::parse(slurp(fs::path(HEVT_TEST_DATA) / "two_group.json"));
    const auto sim = hevt::generate(s);
    const auto path = dir / "sim.json";
    hevt::write_sample_json(sim.sample, path);
    return path;
  }

  fs::path dir;
};

TEST_F(CliTest, PrepareToyCounts) {
  hevt::cli::PrepareConfig config;
  config.input = fs::path(HEVT_TEST_DATA) / "toy_records.csv";
  hevt::cli::OutputSink sink(dir / "out", false);
  const auto summary = hevt::cli::cmd_prepare(config, sink);
  sink.commit();
  // A keeps 5 of 6 records, B 2, C 2.
  EXPECT_EQ(summary["raw_records"], 10);
  EXPECT_EQ(summary["n"], 9);
  EXPECT_EQ(summary["p"], 3);
  EXPECT_NEAR(summary["best_time"].get<double>(), 9.98, 1e-12);
  EXPECT_NEAR(summary["worst_time"].get<double>(), 10.30, 1e-12);
  const auto sample = hevt::read_sample_json(dir / "out" / "sample.json");
  EXPECT_EQ(sample.athlete_ids, (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(sample.group_sizes, (std::vector<std::size_t>{5, 2, 2}));
  // The 10.01 tie is spread by wind: 0.1 first.
  EXPECT_NEAR(hevt::to_time(sample.values[2]), 10.0075, 1e-12);
  EXPECT_NEAR(hevt::to_time(sample.values[1]), 10.0125, 1e-12);
}

TEST_F(CliTest, EstimateMatchesLibraryCalls) {
  const auto path = simulated_sample();
  hevt::cli::EstimateConfig config;
  config.sample = path;
  config.k.k_frac = 0.05;
  hevt::cli::OutputSink sink(dir / "out", false);
  const auto summary = hevt::cli::cmd_estimate(config, sink);
  sink.commit();

  const auto data = hevt::prepare_data(hevt::read_sample_json(path));
  const std::size_t k = hevt::k_from_fraction(data.sample.n(), 0.05);
  const auto r = hevt::infer_at_k(data.input(), k);
  EXPECT_EQ(summary["k"], k);
  EXPECT_EQ(summary["gamma"].get<double>(), r.gamma);
  EXPECT_EQ(summary["delta"].get<double>(), r.delta);
  EXPECT_EQ(summary["lambda_at_1"].get<double>(), r.variance_reduction.lambda_at_1);

  std::string expected = "k,gamma,endpoint_time,sigma2_iid,delta,lcb75_time,lcb95_time\n";
  expected += hevt::csv_row({std::to_string(r.k), hevt::format_double(r.gamma),
                             hevt::format_double(r.endpoint_time), hevt::format_double(r.sigma2_iid),
                             hevt::format_double(r.delta),
                             hevt::format_double(r.bound(0.75).lcb_time),
                             hevt::format_double(r.bound(0.95).lcb_time)}) +
              "\n";
  EXPECT_EQ(slurp(dir / "out" / "estimate.csv"), expected);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "out" / "estimate.json")), summary);
}

TEST_F(CliTest, SweepMediansMatchLibrary) {
  const auto path = simulated_sample();
  hevt::cli::SweepConfig config;
  config.sample = path;
  config.step = 10;
  hevt::cli::OutputSink sink(dir, false);
  const auto summary = hevt::cli::cmd_sweep(config, sink);
  const auto data = hevt::prepare_data(hevt::read_sample_json(path));
  const auto s = hevt::sweep(data.input(), 0.03, 0.07, 10);
  const auto& median = summary["protocols"]["median"];
  EXPECT_EQ(median["endpoint_time"].get<double>(), s.median_endpoint_time);
  EXPECT_EQ(median["lcb_time"]["0.95"].get<double>(), s.median_lcb_time.at(0.95));
  EXPECT_EQ(summary["protocols"]["5%"]["k"], hevt::k_from_fraction(data.sample.n(), 0.05));
  EXPECT_EQ(summary["rows"], s.rows.size());
}

TEST_F(CliTest, LambdaFilesAndEndpointConsistency) {
  const auto path = simulated_sample();
  hevt::cli::LambdaConfig config;
  config.sample = path;
  config.k.k = 200;
  config.grid = 50;
  hevt::cli::OutputSink sink(dir, false);
  const auto summary = hevt::cli::cmd_lambda(config, sink);
  sink.commit();
  std::ifstream in(dir / "lambda.csv");
  std::string line, last;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines, last = line;
  EXPECT_EQ(lines, 51u);
  const auto cells = hevt::split_csv_line(last);
  EXPECT_EQ(cells[0], "1");
  EXPECT_NEAR(std::stod(cells[1]), summary["lambda_at_1"].get<double>(), 1e-12);
  EXPECT_TRUE(fs::exists(dir / "lambda_reference.csv"));
  EXPECT_EQ(summary["k"], 200);
}

TEST_F(CliTest, ExtrapolateAndSurface) {
  const auto path = simulated_sample();
  hevt::cli::ExtrapolateConfig ex;
  ex.sample = path;
  ex.k.k = 200;
  hevt::cli::OutputSink sink(dir, false);
  const auto summary = hevt::cli::cmd_extrapolate(ex, sink);
  EXPECT_EQ(summary["max_rank"], 200);
  hevt::cli::RSurfaceConfig rs;
  rs.sample = path;
  rs.k.k_frac = 0.05;
  rs.grid_points = 4;
  const auto rsum = hevt::cli::cmd_rsurface(rs, sink);
  sink.commit();
  std::ifstream in(dir / "rsurface.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 17u);
  EXPECT_EQ(rsum["k"], hevt::k_from_fraction(rsum["n"].get<std::size_t>(), 0.05));
}

TEST_F(CliTest, OverwriteProtection) {
  hevt::cli::OutputSink first(dir, false);
  first.add("a.txt", "one");
  first.commit();
  hevt::cli::OutputSink second(dir, false);
  second.add("b.txt", "two");
  second.add("a.txt", "two");
  EXPECT_THROW(second.commit(), std::runtime_error);
  EXPECT_FALSE(fs::exists(dir / "b.txt"));
  EXPECT_EQ(slurp(dir / "a.txt"), "one");
  hevt::cli::OutputSink forced(dir, true);
  forced.add("a.txt", "three");
  forced.commit();
  EXPECT_EQ(slurp(dir / "a.txt"), "three");
}

TEST_F(CliTest, OutputDirectoryResolution) {
  ::setenv("HEVT_OUT_DIR", "/tmp/from_env", 1);
  EXPECT_EQ(hevt::cli::resolve_out_dir(std::nullopt), fs::path("/tmp/from_env"));
  EXPECT_EQ(hevt::cli::resolve_out_dir(std::string("flag")), fs::path("flag"));
  ::unsetenv("HEVT_OUT_DIR");
  EXPECT_EQ(hevt::cli::resolve_out_dir(std::nullopt), fs::path("."));
}

TEST(KSelection, ExactlyOne) {
  hevt::cli::KSelection both;
  both.k = 10;
  both.k_frac = 0.1;
  EXPECT_THROW((void)both.resolve(100), std::invalid_argument);
  hevt::cli::KSelection big;
  big.k = 100;
  EXPECT_THROW((void)big.resolve(100), std::out_of_range);
  hevt::cli::KSelection frac;
  frac.k_frac = 0.05;
  EXPECT_EQ(frac.resolve(1000), 50u);
}

TEST(RenderTable, FlattensJson) {
  const auto j = nlohmann::json::parse(R"({"a": 1, "b": {"c": [2, "x"]}, "w": []})");
  EXPECT_EQ(hevt::cli::render_table(j), "a: 1\nb.c[0]: 2\nb.c[1]: \"x\"\nw: []\n");
  EXPECT_EQ(hevt::cli::lcb_column(0.95), "lcb95_time");
  EXPECT_EQ(hevt::cli::lcb_column(0.975), "lcb97.5_time");
}

TEST_F(CliTest, SimulateIsByteIdentical) {
  hevt::cli::SimulateConfig config;
  config.scenario = fs::path(HEVT_TEST_DATA) / "two_group.json";
  config.reps = 100;
  for (const char* sub : {"a", "b"}) {
    hevt::cli::OutputSink sink(dir / sub, false);
    hevt::cli::cmd_simulate(config, sink);
    sink.commit();
  }
  EXPECT_EQ(slurp(dir / "a" / "coverage_reps.csv"), slurp(dir / "b" / "coverage_reps.csv"));
  EXPECT_EQ(slurp(dir / "a" / "coverage.json"), slurp(dir / "b" / "coverage.json"));

  config.experiment = "lemma";
  config.reps = 3;
  config.n_grid = {2000, 4000};
  config.grid_points = 4;
  hevt::cli::OutputSink lemma(dir / "c", false);
  const auto summary = hevt::cli::cmd_simulate(config, lemma);
  EXPECT_EQ(summary["median_sup_error"].size(), 2u);
  config.experiment = "nope";
  EXPECT_THROW((void)hevt::cli::cmd_simulate(config, lemma), std::invalid_argument);
}

TEST_F(CliTest, ExecutableExitCodes) {
  const std::string exe = HEVT_EXE;
  const auto toy = (fs::path(HEVT_TEST_DATA) / "toy_records.csv").string();
  const auto out = (dir / "run").string();
  const auto quiet = " > " + (dir / "log.txt").string() + " 2>&1";
  EXPECT_EQ(std::system((exe + " prepare " + toy + " --out " + out + quiet).c_str()), 0);
  EXPECT_NE(std::system((exe + " prepare " + toy + " --out " + out + quiet).c_str()), 0);
  EXPECT_EQ(std::system((exe + " prepare " + toy + " --out " + out + " --force" + quiet).c_str()), 0);
  const auto sample = (dir / "run" / "sample.json").string();
  EXPECT_NE(std::system((exe + " lambda " + sample + " --out " + out + quiet).c_str()), 0);
  EXPECT_NE(std::system((exe + " lambda " + sample + " --k 2 --k-frac 0.1 --out " + out + quiet).c_str()), 0);
}

}  // namespace
