#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "elastodual/report.hpp"

using namespace elastodual;

namespace {

const char* kMinimal =
    "material.lambda = 1\n"
    "material.mu = 1\n"
    "grid.extents = 1, 1, 1\n"
    "grid.dims = 5, 5, 5\n";

std::string config_with(const std::string& extra) { return std::string(kMinimal) + extra; }

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("elastodual_test_" + name);
  std::ofstream(p) << content;
  return p;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ELASTODUAL_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseConfig, MinimalDefaults) {
  const ExperimentConfig c = parse_config_text(kMinimal);
  EXPECT_DOUBLE_EQ(c.K_safety, 0.5);
  EXPECT_FALSE(c.K.has_value());
  EXPECT_EQ(c.seed, 0u);
  EXPECT_TRUE(c.deterministic);
  EXPECT_EQ(c.tol.grad_tol, Tolerances{}.grad_tol);
  EXPECT_EQ(c.tol.outer_patience, 10);
  EXPECT_EQ(c.loads.preset, "none");
  EXPECT_NEAR(resolve_K(c), 0.5, 1e-12);
}

TEST(ParseConfig, AllKeysAccepted) {
  const ExperimentConfig c = parse_config_text(config_with(
      "K = 0.3\nK.safety = 0.4\ngrid.gamma0 = x-, y+\nloads.preset = ramp\nloads.amplitude = 0.01\n"
      "run.ladder = 5 9\nchecks.nodes = 3\nchecks.directions = 4\nchecks.radius = 0.5\nseed = 9\n"
      "deterministic = off\ntol.inner_tol = 1e-10   # comment\ntol.outer_max_iters = 7\n"));
  EXPECT_DOUBLE_EQ(*c.K, 0.3);
  EXPECT_EQ(c.grid.tags[static_cast<int>(Face::YPlus)], BoundaryTag::Gamma0);
  EXPECT_EQ(c.grid.tags[static_cast<int>(Face::XPlus)], BoundaryTag::Gamma1);
  EXPECT_EQ(c.ladder, (std::vector<int>{5, 9}));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_FALSE(c.deterministic);
  EXPECT_DOUBLE_EQ(c.tol.inner_tol, 1e-10);
  EXPECT_EQ(c.tol.outer_max_iters, 7);
  EXPECT_DOUBLE_EQ(*c.loads.amplitude, 0.01);
}

TEST(ParseConfig, ErrorsNameTheKey) {
  EXPECT_NE(error_of("material.lambda = -1\n").find("material.lambda"), std::string::npos);
  EXPECT_NE(error_of("material.lambda = 0\n").find("material.lambda"), std::string::npos);
  EXPECT_NE(error_of("material.mu = abc\n").find("material.mu"), std::string::npos);
  EXPECT_NE(error_of("grid.dims = 5, 2, 5\n").find("grid.dims"), std::string::npos);
  EXPECT_NE(error_of("loads.preset = wave\n").find("loads.preset"), std::string::npos);
  EXPECT_NE(error_of("grid.gamma0 = w-\n").find("grid.gamma0"), std::string::npos);
  EXPECT_NE(error_of("K.safety = 1.5\n").find("K.safety"), std::string::npos);
  EXPECT_NE(error_of("colour = red\n").find("colour"), std::string::npos);
  EXPECT_NE(error_of("seed = 1\nseed = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("just text\n").find("key = value"), std::string::npos);
}

TEST(ParseConfig, UnstableExplicitK) {
  const ExperimentConfig c = parse_config_text(config_with("K = 2\n"));
  try {
    resolve_model(c, c.grid);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("K violates stability condition; max admissible"), std::string::npos);
  }
}

TEST(Emit, CsvHeaders) {
  const Series s{{"iteration", "J_tilde_star"}, {{0, -1.5}, {1, -1.25}, {2, -1.0}}};
  std::ostringstream os;
  emit_csv(os, s);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,J_tilde_star");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Emit, JsonRoundTripKeepsDoubles) {
  const double values[] = {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 1e-300};
  Json doc = {{"values", Json::array()}};
  for (double v : values) doc["values"].push_back(v);
  std::ostringstream os;
  emit_json(os, doc);
  const Json back = Json::parse(os.str());
  for (std::size_t k = 0; k < std::size(values); ++k) EXPECT_EQ(back["values"][k].get<double>(), values[k]);
}

TEST(RunCommand, ManufactureZeroPreset) {
  const ExperimentConfig c = parse_config_text(config_with("loads.preset = zero\n"));
  const RunOutcome o = run_command("manufacture", c);
  const Json& g = o.document["results"]["gap"];
  EXPECT_EQ(g["gap"].get<double>(), 0.0);
  for (const auto& [k, v] : g["extremality"].items()) EXPECT_EQ(v["linf"].get<double>(), 0.0) << k;
}

TEST(RunCommand, VerifyDualityZeroLoads) {
  const ExperimentConfig c = parse_config_text(kMinimal);
  const RunOutcome o = run_command("verify-duality", c);
  const Json& w = o.document["results"]["weak_duality"];
  EXPECT_EQ(w["J"].get<double>(), 0.0);
  EXPECT_EQ(w["J_tilde_star"].get<double>(), 0.0);
  EXPECT_EQ(w["gap"].get<double>(), 0.0);
  EXPECT_TRUE(w["holds"].get<bool>());
  EXPECT_FALSE(o.numerical_failure);
  ASSERT_TRUE(o.series.has_value());
  EXPECT_EQ(o.series->columns, (std::vector<std::string>{"iteration", "J_tilde_star"}));
}

TEST(RunCommand, GapStudySeries) {
  const ExperimentConfig c = parse_config_text(config_with("loads.preset = sine-bump\nrun.ladder = 5, 9, 17\n"));
  const RunOutcome o = run_command("gap-study", c);
  ASSERT_TRUE(o.series.has_value());
  EXPECT_EQ(o.series->columns, (std::vector<std::string>{"h", "gap", "primal", "dual"}));
  ASSERT_EQ(o.series->rows.size(), 3u);
  for (std::size_t k = 1; k < 3; ++k) EXPECT_LT(o.series->rows[k][1], o.series->rows[k - 1][1]);
  EXPECT_GE(o.document["results"]["observed_order"].get<double>(), 1.0);
}

TEST(RunCommand, RejectsUnknownCommand) {
  EXPECT_THROW(run_command("solve", parse_config_text(kMinimal)), ValidationError);
}

TEST(RunCommand, DeterministicDocument) {
  const ExperimentConfig c = parse_config_text(config_with("loads.preset = sine-bump\nseed = 4\n"));
  const Json a = without_timings(run_command("verify-duality", c).document);
  const Json b = without_timings(run_command("verify-duality", c).document);
  EXPECT_EQ(a.dump(2), b.dump(2));
  EXPECT_FALSE(a.contains("timings"));
}

TEST(LogLogSlope, ExactPowerLaw) {
  EXPECT_NEAR(loglog_slope({0.25, 0.125, 0.0625}, {0.5, 0.125, 0.03125}), 2.0, 1e-12);
}

TEST(Cli, ExitCodes) {
  const auto good = temp_file("good.cfg", kMinimal);
  const auto bad = temp_file("bad.cfg", "material.lambda = -1\n");
  const auto out = std::filesystem::temp_directory_path() / "elastodual_test_out.json";
  EXPECT_EQ(run_cli("manufacture --config " + good.string()), 1);  // no preset
  EXPECT_EQ(run_cli("dual-solve --config " + good.string() + " --out " + out.string()), 0);
  EXPECT_TRUE(Json::parse(std::ifstream(out))["results"].contains("dual"));
  EXPECT_EQ(run_cli("primal-solve --config " + bad.string()), 1);
  EXPECT_EQ(run_cli("primal-solve --config /nonexistent.cfg"), 1);
  EXPECT_EQ(run_cli("primal-solve --config " + good.string() + " --format csv-series"), 1);
  EXPECT_EQ(run_cli("primal-solve --config " + good.string() + " --grid-override 4,4"), 1);
  EXPECT_EQ(run_cli("primal-solve"), 1);
  const auto tiny = temp_file("tiny.cfg", config_with("tol.max_iters = 1\nloads.preset = sine-bump\n"));
  EXPECT_EQ(run_cli("primal-solve --config " + tiny.string()), 2);
}

TEST(Cli, CsvSeriesOutput) {
  const auto cfg = temp_file("series.cfg", config_with("loads.preset = sine-bump\nrun.ladder = 5, 9\n"));
  const auto out = std::filesystem::temp_directory_path() / "elastodual_test_series.csv";
  ASSERT_EQ(run_cli("gap-study --config " + cfg.string() + " --format csv-series --out " + out.string()), 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "h,gap,primal,dual");
}
