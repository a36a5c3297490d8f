#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddocp/cli/commands.hpp"
#include "ddocp/cli/config.hpp"
#include "ddocp/cli/csv.hpp"

using namespace ddocp;
using namespace ddocp::cli;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("ddocp_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "ddocp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

std::string failure_message(const std::string& text) {
  try {
    parse_config(text, "inline");
  } catch (const ConfigFailure& e) {
    return e.what();
  }
  return {};
}

const char* kSmall = R"({
  "operating_point": {"power": 1.0},
  "grid": {"dt": 30.0, "intervals": 4},
  "simulation": {"step": 0.01, "sample_interval": 1.0}
})";

std::vector<double> col(const CsvTable& t, const std::string& name) {
  const std::size_t j = t.column(name);
  std::vector<double> out;
  for (const auto& r : t.rows) out.push_back(r[j]);
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  SUBCASE("unknown keys are named") {
    const std::string msg = failure_message(R"({"kernel": {"visocsity": 0.01}})");
    CHECK(msg.find("unknown key \"visocsity\"") != std::string::npos);
    CHECK(msg.find("/kernel") != std::string::npos);
  }
  SUBCASE("zero power is rejected") {
    CHECK(!failure_message(R"({"operating_point": {"power": 0}})").empty());
    CHECK(!failure_message(R"({"ocp": {"setpoint": [{"time": 0, "power": 0}]}})").empty());
  }
  SUBCASE("crossed bounds are rejected") {
    const ScenarioConfig c = parse_config(R"({"ocp": {"bounds": {"average_velocity": [5.0, 1.0]}}})", "inline");
    CHECK_THROWS_AS(c.ocp_spec(), ConfigFailure);
  }
  SUBCASE("syntax errors carry a position") {
    const std::string msg = failure_message("{\n  \"grid\": {\"dt\": }\n}");
    CHECK(msg.find("line 2") != std::string::npos);
  }
  SUBCASE("defaults") {
    const ScenarioConfig c = parse_config("{}", "inline");
    CHECK(c.power == 1.0);
    CHECK(c.average_velocity == 4.0);
    CHECK(c.kernel_points == 30);
    CHECK(c.effective_setpoint().at(1e4) == 1.0);
  }
  SUBCASE("the embedded schema is valid JSON") {
    const auto schema = nlohmann::json::parse(config_schema());
    CHECK(schema.at("additionalProperties") == false);
  }
  SUBCASE("shipped scenarios parse") {
    for (const auto& e : fs::directory_iterator(DDOCP_SCENARIO_DIR)) {
      if (e.path().extension() == ".json") CHECK_NOTHROW(load_config(e.path()).ocp_spec());
    }
  }
}

TEST_CASE("exit codes") {
  TempDir tmp;
  const auto bad = write_file(tmp.path, "bad.json", R"({"operating_point": {"power": 0}})");
  const auto crossed = write_file(tmp.path, "crossed.json", R"({"ocp": {"bounds": {"average_velocity": [5, 1]}}})");
  const auto one = write_file(tmp.path, "one.json", R"({"grid": {"intervals": 1}})");
  const auto out = (tmp.path / "out").string();
  CHECK(run_args({"--config", bad.string(), "--out", out, "steady"}) == kExitConfig);
  CHECK(run_args({"--config", crossed.string(), "--out", out, "solve"}) == kExitConfig);
  CHECK(run_args({"--config", one.string(), "--out", out, "solve"}) == kExitOk);
  CHECK(fs::exists(tmp.path / "out" / "report.json"));
  CHECK(run_args({"--config", one.string()}) == kExitConfig);
  CHECK(run_args({"--config", (tmp.path / "missing.json").string(), "steady"}) == kExitConfig);
  CHECK(run_args({"--print-schema"}) == kExitOk);
}

TEST_CASE("steady bundle") {
  TempDir tmp;
  const ScenarioConfig c = parse_config(kSmall, "inline");
  REQUIRE(cmd_steady(c, tmp.path) == kExitOk);
  const CsvTable t = read_csv(tmp.path / "steady.csv");
  REQUIRE(t.rows.size() == 1);
  CHECK(col(t, "T_hx")[0] == Approx(725.15).epsilon(1e-12));
  CHECK(col(t, "T_r")[0] == Approx(725.371).epsilon(2e-6));
  CHECK(col(t, "Q_g_MW")[0] == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kernel bundle") {
  TempDir tmp;
  const ScenarioConfig c = parse_config(kSmall, "inline");
  REQUIRE(cmd_kernel(c, tmp.path) == kExitOk);
  const CsvTable k = read_csv(tmp.path / "kernel.csv");
  const auto tau = col(k, "tau_s");
  const auto alpha = col(k, "alpha_1ps");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] < 3.75) CHECK(alpha[i] == 0.0);
  }
  const CsvTable d = read_csv(tmp.path / "kernel_discrete.csv");
  double sum = 0.0;
  for (double w : col(d, "w_k")) sum += w;
  CHECK(std::abs(sum - 1.0) < 1e-12);
  CHECK(d.rows.size() == 30);
}

TEST_CASE("constant setpoint: surrogate and true system agree") {
  TempDir tmp;
  const ScenarioConfig c = parse_config(kSmall, "inline");
  REQUIRE(cmd_compare(c, tmp.path) == kExitOk);
  std::ifstream in(tmp.path / "metrics.json");
  const auto metrics = nlohmann::json::parse(in);
  CHECK(metrics.at("max_abs_dQ_g_MW").get<double>() < 1e-3);
  for (const char* f : {"inputs.csv", "true_trajectory.csv", "approx_trajectory.csv", "error.csv", "comparison.csv",
                        "precursors.csv", "report.json"}) {
    CHECK_MESSAGE(fs::exists(tmp.path / f), f);
  }

  // A schedule from the solve can be replayed.
  TempDir again;
  REQUIRE(cmd_compare(c, again.path, tmp.path / "inputs.csv") == kExitOk);
  CHECK(!fs::exists(again.path / "report.json"));
  CHECK(read_input_schedule(tmp.path / "inputs.csv").size() == 4);
}

TEST_CASE("csv round trip") {
  TempDir tmp;
  CsvTable t;
  t.header = {"a", "b"};
  t.add({1.0, 0.1});
  t.add({-2.5e-9, 123456.789});
  write_csv(tmp.path / "t.csv", t);
  const CsvTable r = read_csv(tmp.path / "t.csv");
  CHECK(r.header == t.header);
  CHECK(col(r, "b")[1] == Approx(123456.789).epsilon(1e-11));
  CHECK(col(r, "a")[1] == Approx(-2.5e-9).epsilon(1e-11));
  CHECK_THROWS_AS(r.column("c"), ConfigFailure);
}
