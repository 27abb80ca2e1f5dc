#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "regm/cli.hpp"
#include "regm/config.hpp"
#include "regm/error.hpp"

using namespace regm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("regm_cli_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json report(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "report.json")); }

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "regm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = ExperimentConfig::parse("# comment\nn = 100\nn_grid = 100, 200,400\nlambda=0.5  # trailing\n");
  CHECK(cfg.get_int("n", 0) == 100);
  CHECK(cfg.get_ints("n_grid", {}) == std::vector<long>{100, 200, 400});
  CHECK(cfg.get_double("lambda", 0.0) == 0.5);
  CHECK(cfg.get_double("lambda2", 7.0) == 7.0);
  CHECK(cfg.echo() == "lambda = 0.5\nn = 100\nn_grid = 100,200,400\n");
}

TEST_CASE("config rejects unknown keys and bad values, naming the key") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("lamda = 1"), doctest::Contains("lamda"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("sigma = -1"), doctest::Contains("sigma"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("estimator = scad"), doctest::Contains("estimator"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse("n = 1.5"), doctest::Contains("'n'"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("just text"), ConfigError);
}

TEST_CASE("echo round trips") {
  const auto a = ExperimentConfig::parse("lambda = 0.10\nseed=3\ntheta0 = 1, -2.50");
  const auto b = ExperimentConfig::parse(a.echo());
  CHECK(a.values() == b.values());
}

TEST_CASE("fit above the KKT threshold writes zeros") {
  const auto dir = fresh_dir("fit");
  CHECK(invoke({"fit", "--out", dir.string(), "--n", "50", "--lambda", "1000"}) == 0);
  const auto r = report(dir);
  for (const auto& v : r["results"]["fit"]["theta_hat"]) CHECK(v.get<double>() == 0.0);
  CHECK(fs::exists(dir / "data.csv"));
  CHECK(fs::exists(dir / "fit.csv"));
  CHECK(fs::exists(dir / "config.echo"));
  CHECK(r["command"] == "fit");
  CHECK(r.contains("verdicts"));
}

TEST_CASE("mc-linearity with the exact estimator passes") {
  const auto dir = fresh_dir("exact");
  CHECK(invoke({"mc-linearity", "--out", dir.string(), "--estimator", "exact", "--reps", "100", "--n-grid",
                "50,100,200,400"}) == 0);
  CHECK(report(dir)["verdicts"]["linearity"] == true);
  CHECK(fs::exists(dir / "runs.csv"));
}

TEST_CASE("ridge linearity fails with exit 1") {
  const auto dir = fresh_dir("ridge");
  CHECK(invoke({"mc-linearity", "--out", dir.string(), "--estimator", "ridge", "--lambda2", "0.5", "--reps", "100",
                "--n-grid", "100,200,400,800", "--threads", "4"}) == 1);
  CHECK(report(dir)["verdicts"]["linearity"] == false);
}

TEST_CASE("usage errors exit 2") {
  const auto dir = fresh_dir("usage");
  CHECK(invoke({"fit", "--out", dir.string(), "--bogus", "1"}) == 2);
  CHECK(invoke({"frobnicate", "--out", dir.string()}) == 2);
  CHECK(invoke({"fit", "--out", dir.string(), "--set", "nope=1"}) == 2);
  CHECK(invoke({"fit", "--out", dir.string(), "--estimator", "scad"}) == 2);
  CHECK(invoke({"mc-linearity", "--out", dir.string(), "--n-grid", "100,200"}) == 2);
  CHECK(invoke({"fit"}) == 2);
}

TEST_CASE("config file with flag overrides") {
  const auto dir = fresh_dir("cfgfile");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "exp.cfg");
    f << "n = 80\nlambda = 0.2\nseed = 5\n";
  }
  CHECK(invoke({"fit", "--out", (dir / "out").string(), "--config", (dir / "exp.cfg").string(), "--lambda", "0.3"}) ==
        0);
  CHECK(slurp(dir / "out" / "config.echo").find("lambda = 0.3") != std::string::npos);
  CHECK(report(dir / "out")["results"]["lambda"] == 0.3);
}

TEST_CASE("every command runs and re-runs byte-identically from its echo") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"fit", {"--n", "60", "--estimator", "en", "--lambda2", "0.2"}},
      {"ic", {"--n", "60", "--estimator", "adaptive"}},
      {"onestep", {"--n", "60"}},
      {"onestep", {"--reps", "100", "--n-grid", "100,200,400,800", "--threads", "3"}},
      {"mc-normality", {"--reps", "50", "--n-grid", "300"}},
      {"approx-check", {"--n", "60", "--set", "bound=1", "--set", "exclude_radius=0.01"}},
      {"rank-fit", {"--n", "40"}},
  };
  int k = 0;
  for (const auto& [cmd, extra] : cases) {
    CAPTURE(cmd);
    const auto a = fresh_dir("det_a" + std::to_string(k));
    const auto b = fresh_dir("det_b" + std::to_string(k++));
    std::vector<std::string> args = {cmd, "--out", a.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const int status = invoke(args);
    CHECK(status != 2);
    fs::create_directories(b);
    CHECK(invoke({cmd, "--out", b.string(), "--config", (a / "config.echo").string()}) == status);
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      CAPTURE(entry.path().filename().string());
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
  }
}

TEST_CASE("rank-fit rejects an intercept") {
  const auto dir = fresh_dir("rank_int");
  CHECK(invoke({"rank-fit", "--out", dir.string(), "--set", "intercept=true", "--set", "theta0=1,2,3"}) == 2);
}
