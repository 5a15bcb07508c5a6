#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dmpc_cli_test";

struct Run {
  int code = -1;
  std::string output;
};

Run cli(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path log = kWork / "last.log";
  const std::string cmd = std::string("\"") + DMPC_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  r.output.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string path(const std::string& name) { return (kWork / name).string(); }

const std::string kFixture = std::string(DMPC_SOURCE_DIR) + "/tests/data/four_agents.json";

}  // namespace

TEST_CASE("gen") {
  auto r = cli("gen --n 20 --density 1.0 --seed 7 -o " + path("s20.json"));
  REQUIRE(r.code == 0);
  const json s = json::parse(slurp(path("s20.json")));
  CHECK(s["agents"].size() == 20);
  for (int l = 0; l < 3; ++l) {
    const double side = s["workspace"]["max"][l].get<double>() - s["workspace"]["min"][l].get<double>();
    CHECK(side == doctest::Approx(std::cbrt(20.0)));
  }
  CHECK(s["seed"] == 7);

  r = cli("gen --n 4 --box 2,2,1 --seed 1 -o " + path("s4.json"));
  REQUIRE(r.code == 0);
  CHECK(json::parse(slurp(path("s4.json")))["agents"].size() == 4);
  REQUIRE(cli("gen --n 4 --box 2,2,1 --seed 1 --preset small -o " + path("small.json")).code == 0);
  CHECK(json::parse(slurp(path("small.json")))["phys"]["r_min"] == 0.25);

  CHECK(cli("gen --n 4 --box 2,2,1 --seed 1").code == 64);
  CHECK(cli("gen --n 4 --box 2,2 -o " + path("x.json")).code == 64);
  CHECK(cli("gen --n 500 --box 1,1,1 -o " + path("x.json")).code == 2);
  CHECK(cli("gen --n 4 --box 2,2,1 -o /nonexistent-dir/s.json").code == 1);
  CHECK(cli("bogus").code == 64);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("solve and check") {
  auto r = cli("solve " + kFixture + " --out-dir " + path("out"));
  REQUIRE(r.code == 0);
  const std::string csv = slurp(path("out/trajectory.csv"));
  const json m = json::parse(slurp(path("out/metrics.json")));
  CHECK(m["success"] == true);
  CHECK(m["reason"] == "none");
  // one row per agent per Ts sample over the whole transition
  const auto rows = std::count(csv.begin(), csv.end(), '\n') - 1;
  const double T = m["steps"].get<int>() * 0.2;
  CHECK(rows == 4 * (std::lround(T / 0.01) + 1));

  CHECK(cli("check " + path("out/trajectory.csv") + " " + kFixture).code == 0);

  // planner failure still writes both files
  r = cli("solve " + kFixture + " --strategy hard-full-horizon --out-dir " + path("hard"));
  CHECK((r.code == 0 || r.code == 3));
  const json hm = json::parse(slurp(path("hard/metrics.json")));
  CHECK(hm.contains("reason"));
  CHECK(fs::exists(path("hard/trajectory.csv")));

  std::ofstream(path("bad.json")) << "{\"format\": 1,\n \"agents\": [{\"start\": [0, 0]}]}";
  r = cli("solve " + path("bad.json") + " --out-dir " + path("bad"));
  CHECK(r.code == 2);
  CHECK(r.output.find("bad.json:2:") != std::string::npos);
  CHECK(cli("solve " + kFixture + " --strategy sideways --out-dir " + path("x")).code == 64);
  CHECK(cli("solve /nonexistent-dir/s.json --out-dir " + path("x")).code == 1);

  std::ofstream(path("cfg.json")) << "{\"algo\": {\"T_max\": 1.0}}";
  r = cli("solve " + kFixture + " --config " + path("cfg.json") + " --out-dir " + path("short"));
  CHECK(r.code == 3);
  CHECK(json::parse(slurp(path("short/metrics.json")))["reason"] == "timeout");

  // truncated mid-row
  std::ofstream(path("cut.csv")) << csv.substr(0, csv.size() - 10);
  CHECK(cli("check " + path("cut.csv") + " " + kFixture).code == 2);
}

TEST_CASE("check reports an injected near miss") {
  std::ofstream(path("nm.json"))
      << "{\"format\": 1, \"agents\": [{\"start\": [0,0,1], \"goal\": [0,0,1]}, {\"start\": [1,0,1], \"goal\": [0.29,0,1.8]}]}";
  std::ofstream(path("nm.csv")) << "agent_id,t,px,py,pz,vx,vy,vz,ax,ay,az\n"
                                   "0,0,0,0,1,0,0,0,0,0,0\n0,0.01,0,0,1,0,0,0,0,0,0\n"
                                   "1,0,1,0,1,0,0,0,0,0,0\n1,0.01,0.29,0,1,0,0,0,0,0,0\n";
  const auto r = cli("check " + path("nm.csv") + " " + path("nm.json"));
  CHECK(r.code == 3);
  CHECK(r.output.find("agents 0 and 1") != std::string::npos);
  CHECK(r.output.find("t=0.01") != std::string::npos);
}

TEST_CASE("cluster modes are repeatable and timed") {
  for (int c : {1, 8}) {
    const std::string tag = "c" + std::to_string(c);
    REQUIRE(cli("solve " + kFixture + " --clusters " + std::to_string(c) + " --out-dir " + path(tag + "a")).code != 2);
    REQUIRE(cli("solve " + kFixture + " --clusters " + std::to_string(c) + " --out-dir " + path(tag + "b")).code != 2);
    CHECK(slurp(path(tag + "a/trajectory.csv")) == slurp(path(tag + "b/trajectory.csv")));
    CHECK(json::parse(slurp(path(tag + "a/metrics.json")))["wall_time_s"].get<double>() > 0.0);
  }
}

TEST_CASE("bench") {
  auto r = cli("bench --trials 0 -o " + path("b0.json"));
  REQUIRE(r.code == 0);
  const json b0 = json::parse(slurp(path("b0.json")));
  CHECK(b0["aggregate"].empty());
  CHECK(b0["trials"].empty());

  fs::remove(path("b2.json"));
  const std::string args = "bench --trials 2 --n 3 --density 1 --strategies soft-on-demand,hard-on-demand -o " + path("b2.json");
  REQUIRE(cli(args).code == 0);
  const std::string first = slurp(path("b2.json"));
  const json b2 = json::parse(first);
  CHECK(b2["trials"].size() == 4);
  REQUIRE(b2["aggregate"].size() == 2);
  for (const auto& row : b2["aggregate"]) {
    CHECK(row["trials"] == 2);
    CHECK(row.contains("success_rate"));
    CHECK(row.contains("mean_wall_time_s"));
    CHECK(row.contains("std_wall_time_s"));
    CHECK(row.contains("mean_distance_ratio"));
  }
  // completed trials are skipped, wall times included
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(path("b2.json")) == first);

  CHECK(cli("bench --trials 1 --strategies nope -o " + path("b3.json")).code == 64);
}
