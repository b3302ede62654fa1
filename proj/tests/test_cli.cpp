#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "tori/cli.hpp"

using namespace tori;

namespace {

json load(const std::string& name) {
  std::ifstream f(std::string(TORI_SOURCE_DIR) + "/configs/" + name);
  REQUIRE(f);
  json j;
  f >> j;
  return j;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(TORI_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string temp_config(const std::string& name, const json& j) {
  std::string path = std::string("/tmp/tori_cli_test_") + name + ".json";
  std::ofstream(path) << j.dump();
  return path;
}

}  // namespace

TEST_CASE("classify lists all subtori") {
  auto r = run("classify", load("classify_case_b_2e6.json"));
  CHECK(r["result"]["count"] == 16);
  CHECK(r["result"]["subtori"].size() == 16);
  CHECK(r["timing"].is_null());
}

TEST_CASE("admissible decisions with verified witnesses") {
  auto r = run("admissible", load("admissible_f3_q5.json"));
  const auto& d = r["result"]["decisions"];
  REQUIRE(d.size() == 4);
  CHECK(d[0]["decision"]["verdict"] == "admissible");
  CHECK(d[1]["decision"]["verdict"] == "admissible");
  CHECK(d[2]["decision"]["verdict"] == "not-admissible");
  CHECK(d[2]["witness_verified"] == true);
  CHECK(d[3]["witness_verified"] == true);
}

TEST_CASE("verify agrees with the oracle") {
  auto r = run("verify", load("verify_q3_e1.json"));
  CHECK(r["result"]["summary"]["all_agree"] == true);
}

TEST_CASE("embeddable") {
  CHECK(run("embeddable", load("embeddable_quadratic.json"))["result"]["embeddable"] == true);
  CHECK(run("embeddable", load("embeddable_cubic_unramified.json"))["result"]["embeddable"] == false);
}

TEST_CASE("overrides and determinism") {
  auto cfg = load("admissible_f3_q5.json");
  RunOptions opt;
  opt.precision = 24;
  opt.seed = 7;
  auto r = run("admissible", cfg, opt);
  CHECK(r["config"]["precision"] == 24);
  CHECK(r["seed"] == 7);
  auto again = run("admissible", r["config"], opt);
  CHECK(again == r);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(run("nonsense", load("classify_case_b_2e6.json")), ConfigError);
  CHECK_THROWS_AS(run("classify", json::array()), ConfigError);
  json bad = load("classify_case_b_2e6.json");
  bad["tower"]["halfdeg"] = 0;
  CHECK_THROWS_AS(run("classify", bad), ConfigError);
  json wrong_div = load("admissible_f3_q5.json");
  wrong_div["divisors"] = json::array({json::array({4})});
  CHECK_THROWS_AS(run("admissible", wrong_div), ConfigError);
  json b3 = load("classify_case_b_2e6.json");
  b3["tower"]["p"] = 3;
  b3["tower"]["q"] = 3;
  CHECK_THROWS_AS(run("classify", b3), ConfigError);
  CHECK_THROWS_AS(run("embeddable", load("classify_case_b_2e6.json")), ConfigError);
}

TEST_CASE("oracle budget is enforced") {
  json cfg = load("verify_q3_e1.json");
  cfg["oracle"]["budget"] = 100;
  CHECK_THROWS_AS(run("verify", cfg), BudgetError);
}

TEST_CASE("executable exit codes") {
  std::string dir = std::string(TORI_SOURCE_DIR) + "/configs/";
  CHECK(run_cli("classify --config " + dir + "classify_case_b_2e6.json") == 0);
  CHECK(run_cli("classify --config /nonexistent.json") == kConfigInvalid.exit_status);
  json cfg = load("verify_q3_e1.json");
  cfg["oracle"]["budget"] = 100;
  CHECK(run_cli("verify --config " + temp_config("budget", cfg)) == kBudgetExceeded.exit_status);
  json bad = load("classify_case_b_2e6.json");
  bad["tower"]["case"] = "C";
  CHECK(run_cli("classify --config " + temp_config("bad", bad)) == kConfigInvalid.exit_status);
}
