#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dmpc/engine.hpp"
#include "dmpc/error.hpp"
#include "dmpc/scenario.hpp"

using namespace dmpc;

namespace {

Scenario sample_scenario() {
  Scenario s;
  s.id = "sample";
  s.seed = 42;
  s.phys.r_min = 0.3;
  s.algo.K = 12;
  s.algo.Q = Vec3(90, 100, 110).asDiagonal();
  s.agents = {{Vec3(-0.5, 0.1, 0.7), Vec3(0.5, -0.1, 1.3), false},
              {Vec3(0.5, 0.5, 1.0), Vec3(0.5, 0.5, 1.0), true},
              {Vec3(0.123456789012345, -0.9, 1.9), Vec3(-0.7, 0.8, 0.2), false}};
  return s;
}

std::string where_of(const std::string& text) {
  try {
    parse_scenario(text, "doc");
  } catch (const SchemaError& e) {
    return e.where();
  }
  return "";
}

}  // namespace

TEST_CASE("scenario JSON round trip is lossless") {
  const Scenario a = sample_scenario();
  const std::string text = scenario_to_json(a);
  const Scenario b = parse_scenario(text);
  CHECK(b.id == a.id);
  CHECK(b.seed == a.seed);
  REQUIRE(b.size() == a.size());
  for (int i = 0; i < a.size(); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    CHECK(b.agents[iu].start == a.agents[iu].start);
    CHECK(b.agents[iu].goal == a.agents[iu].goal);
    CHECK(b.agents[iu].is_static == a.agents[iu].is_static);
  }
  CHECK(b.phys.r_min == a.phys.r_min);
  CHECK(b.phys.p_min == a.phys.p_min);
  CHECK(b.algo.K == a.algo.K);
  CHECK(b.algo.Q == a.algo.Q);
  CHECK(scenario_to_json(b) == text);
}

TEST_CASE("schema errors carry a location") {
  const std::string bad_goal = "{\"format\": 1,\n \"agents\": [{\"start\": [0, 0, 1], \"goal\": [1, 0]}]}";
  const auto w = where_of(bad_goal);
  CHECK(w.find("doc:2:") == 0);
  CHECK(w.find("/agents/0/goal") != std::string::npos);

  // syntax error: line and column of the offending character
  const auto syn = where_of("{\"format\": 1,\n  \"agents\": [,]}");
  CHECK(syn.find("doc:2:") == 0);

  CHECK(where_of("{\"format\": 2, \"agents\": []}").find("/format") != std::string::npos);
  CHECK(where_of("{\"format\": 1, \"agents\": [{\"start\": [0,0,1], \"goal\": [0,0,1]}], \"bogus\": 1}")
            .find("/bogus") != std::string::npos);
  CHECK_FALSE(where_of("{\"format\": 1, \"agents\": [{\"start\": [0,0,1], \"goal\": [0.5,0,1]}]}").size() > 0);
}

TEST_CASE("semantic violations are schema errors") {
  // two agents starting on top of each other
  const std::string text =
      "{\"format\": 1, \"agents\": [{\"start\": [0,0,1], \"goal\": [0.5,0,1]},"
      " {\"start\": [0.1,0,1], \"goal\": [-0.5,0,1]}]}";
  CHECK_THROWS_AS(parse_scenario(text), SchemaError);
}

TEST_CASE("config override") {
  Scenario s = sample_scenario();
  apply_config_override(s, "{\"phys\": {\"r_min\": 0.25}, \"algo\": {\"K\": 20, \"kappa\": 2}}");
  CHECK(s.phys.r_min == 0.25);
  CHECK(s.algo.K == 20);
  CHECK(s.algo.kappa == 2);
  CHECK(s.phys.h == 0.2);
  CHECK_THROWS_AS(apply_config_override(s, "{\"algo\": {\"nope\": 1}}"), SchemaError);
  CHECK_THROWS_AS(apply_config_override(s, "{\"algo\": {\"kappa\": 99}}"), SchemaError);
}

TEST_CASE("presets") {
  CHECK(find_preset("default").has_value());
  CHECK(find_preset("dense")->algo.kappa == 2);
  CHECK(find_preset("small")->phys.r_min == 0.25);
  for (const char* name : {"default", "dense", "small"}) {
    CHECK_NOTHROW(find_preset(name)->phys.validate());
    CHECK_NOTHROW(find_preset(name)->algo.validate());
  }
  CHECK_FALSE(find_preset("huge").has_value());
}

TEST_CASE("generator is deterministic per seed") {
  GenerateOptions o;
  o.n = 4;
  o.box = Vec3(2, 2, 1);
  o.seed = 1;
  const Scenario a = generate_random_scenario(o);
  const Scenario b = generate_random_scenario(o);
  CHECK(scenario_to_json(a) == scenario_to_json(b));
  o.seed = 2;
  CHECK(scenario_to_json(generate_random_scenario(o)) != scenario_to_json(a));
  CHECK(a.size() == 4);
  CHECK((a.phys.p_max - a.phys.p_min).isApprox(Vec3(2, 2, 1)));
}

TEST_CASE("density selects the cube side") {
  GenerateOptions o;
  o.n = 27;
  o.density = 1.0;
  o.seed = 3;
  const Scenario s = generate_random_scenario(o);
  const Vec3 side = s.phys.p_max - s.phys.p_min;
  for (int l = 0; l < 3; ++l) CHECK(side[l] == doctest::Approx(3.0));
  o.n = 20;
  const Vec3 side20 = generate_random_scenario(o).phys.p_max - generate_random_scenario(o).phys.p_min;
  CHECK(side20.x() == doctest::Approx(std::cbrt(20.0)));
}

TEST_CASE("overpacked boxes fail generation") {
  GenerateOptions o;
  o.n = 100;
  o.box = Vec3(1, 1, 1);
  o.point_attempts = 200;
  o.restarts = 2;
  CHECK_THROWS_AS(generate_random_scenario(o), GenerationError);
  o.box.reset();
  CHECK_THROWS_AS(generate_random_scenario(o), Error);
}

TEST_CASE("generated scenarios satisfy the separation margins") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    GenerateOptions o;
    o.n = 2 + static_cast<int>(seed % 12);
    o.density = 1.0;
    o.seed = seed;
    const Scenario s = generate_random_scenario(o);
    REQUIRE(s.size() == o.n);
    const Vec3 th = s.phys.theta();
    for (int i = 0; i < s.size(); ++i) {
      const auto& a = s.agents[static_cast<std::size_t>(i)];
      for (const Vec3& p : {a.start, a.goal})
        CHECK(((p.array() >= s.phys.p_min.array()) && (p.array() <= s.phys.p_max.array())).all());
      for (int j = i + 1; j < s.size(); ++j) {
        const auto& b = s.agents[static_cast<std::size_t>(j)];
        CHECK((a.start - b.start).cwiseQuotient(th).norm() >= s.phys.r_min);
        CHECK((a.goal - b.goal).cwiseQuotient(th).norm() >= s.phys.r_min);
      }
    }
  }
}

TEST_CASE("metrics of a single-agent run") {
  Scenario s;
  s.agents = {{Vec3(-0.5, 0, 1), Vec3(0.5, 0.3, 1.2), false}};
  const auto r = run_transition(s, EngineConfig{});
  const auto m = compute_metrics(r, s);
  CHECK(m.success);
  CHECK(m.straight_line_distance == doctest::Approx((s.agents[0].goal - s.agents[0].start).norm()));
  // the goal ball allows stopping short by up to goal_tol
  CHECK(std::abs(m.travelled_distance - m.straight_line_distance) <= s.algo.goal_tol + 1e-6);
  CHECK(m.distance_ratio() >= 0.95);
  const std::string j = metrics_to_json(m, &r);
  CHECK(j.find("\"success\": true") != std::string::npos);
  CHECK(j.find("\"diagnostics\"") != std::string::npos);
}

TEST_CASE("failed runs report their reason") {
  Scenario s;
  s.algo.T_max = 1.0;
  s.agents = {{Vec3(-0.9, 0, 1), Vec3(0.9, 0, 1), false}};
  const auto r = run_transition(s, EngineConfig{});
  const auto m = compute_metrics(r, s);
  CHECK_FALSE(m.success);
  CHECK(m.reason == FailureReason::timeout);
  CHECK(metrics_to_json(m).find("\"reason\": \"timeout\"") != std::string::npos);
}

TEST_CASE("trajectory CSV round trip and strictness") {
  Scenario s;
  s.agents = {{Vec3(-0.5, 0, 1), Vec3(0.5, 0, 1), false}, {Vec3(0, 0.6, 1), Vec3(0, 0.6, 1), true}};
  const auto r = run_transition(s, EngineConfig{});
  std::ostringstream out;
  write_trajectory_csv(out, r.interpolated);
  const std::string text = out.str();
  CHECK(text.rfind("agent_id,t,px,py,pz,vx,vy,vz,ax,ay,az\n", 0) == 0);
  std::istringstream in(text);
  const auto back = read_trajectory_csv(in);
  REQUIRE(back.agents.size() == 2);
  REQUIRE(back.samples() == r.interpolated.samples());
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < back.agents[i].size(); ++k)
      CHECK((back.agents[i][k].p - r.interpolated.agents[i][k].p).norm() < 1e-8);
  CHECK(check_trajectory(back, s).pass);

  // cut in the middle of a row
  std::istringstream cut(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_trajectory_csv(cut), SchemaError);
  std::istringstream noheader(text.substr(text.find('\n') + 1));
  CHECK_THROWS_AS(read_trajectory_csv(noheader), SchemaError);
}

TEST_CASE("check_trajectory flags agents off their goals") {
  Scenario s;
  s.agents = {{Vec3(-0.5, 0, 1), Vec3(0.5, 0, 1), false}};
  InterpolatedTrajectory t;
  t.agents = {{Sample{0.0, Vec3(-0.5, 0, 1)}, Sample{0.01, Vec3(-0.49, 0, 1)}}};
  const auto rep = check_trajectory(t, s);
  CHECK_FALSE(rep.pass);
  CHECK(rep.agents_off_goal == std::vector<int>{0});
}
