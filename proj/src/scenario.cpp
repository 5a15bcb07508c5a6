#include "dmpc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dmpc/error.hpp"

namespace dmpc {

using nlohmann::json;

std::optional<Preset> find_preset(std::string_view name) {
  Preset p;
  if (name == "default") return p;
  if (name == "dense") {
    p.algo.kappa = 2;
    return p;
  }
  if (name == "small") {
    p.phys.r_min = 0.25;
    p.algo.eps_check = 0.03;
    p.algo.eps_max = 0.03;  // keeps eps_max <= eps_check
    return p;
  }
  return std::nullopt;
}

namespace {

// Maps JSON pointers to "line:col" of their values. Runs only on text that
// already parsed, so it can be permissive.
class PositionIndex {
 public:
  explicit PositionIndex(std::string_view text) : text_(text) {
    skip_ws();
    value("");
  }

  std::string locate(const std::string& pointer) const {
    std::string p = pointer;
    while (true) {
      auto it = offsets_.find(p);
      if (it != offsets_.end()) return line_col(it->second);
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) return "1:1";
      p.resize(slash);
    }
  }

 private:
  std::string line_col(std::size_t off) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < off && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return std::to_string(line) + ":" + std::to_string(col);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string string_token() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out.push_back(text_[pos_++]);
    }
    ++pos_;
    return out;
  }

  void value(const std::string& ptr) {
    offsets_.emplace(ptr, pos_);
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        value(ptr + "/" + key);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      int idx = 0;
      while (pos_ < text_.size() && text_[pos_] != ']') {
        value(ptr + "/" + std::to_string(idx++));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && !std::strchr(",]} \t\r\n", text_[pos_])) ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t> offsets_;
};

struct Reader {
  const std::string& where;
  const PositionIndex& index;

  [[noreturn]] void fail(const std::string& pointer, const std::string& what) const {
    throw SchemaError(where + ":" + index.locate(pointer) + " (" + (pointer.empty() ? "/" : pointer) + ")",
                      what);
  }

  const json& object(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail(ptr, "expected an object");
    for (const auto& [key, _] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail(ptr + "/" + key, "unknown key '" + key + "'");
    }
    return j;
  }

  double number(const json& j, const std::string& ptr) const {
    if (!j.is_number()) fail(ptr, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(ptr, "expected a finite number");
    return v;
  }

  int integer(const json& j, const std::string& ptr) const {
    if (!j.is_number_integer()) fail(ptr, "expected an integer");
    return j.get<int>();
  }

  Vec3 vec3(const json& j, const std::string& ptr) const {
    if (!j.is_array() || j.size() != 3) fail(ptr, "expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = number(j[static_cast<std::size_t>(i)], ptr + "/" + std::to_string(i));
    return v;
  }

  Mat3 mat3(const json& j, const std::string& ptr) const {
    if (!j.is_array() || j.size() != 3) fail(ptr, "expected a 3x3 array");
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = vec3(j[static_cast<std::size_t>(r)], ptr + "/" + std::to_string(r)).transpose();
    return m;
  }

  void read_phys(const json& j, PhysParams& p) const {
    object(j, "/phys", {"h", "Ts", "a_min", "a_max", "r_min", "c", "n"});
    if (j.contains("h")) p.h = number(j["h"], "/phys/h");
    if (j.contains("Ts")) p.Ts = number(j["Ts"], "/phys/Ts");
    if (j.contains("a_min")) p.a_min = vec3(j["a_min"], "/phys/a_min");
    if (j.contains("a_max")) p.a_max = vec3(j["a_max"], "/phys/a_max");
    if (j.contains("r_min")) p.r_min = number(j["r_min"], "/phys/r_min");
    if (j.contains("c")) p.c_ellipsoid = number(j["c"], "/phys/c");
    if (j.contains("n")) p.n_degree = integer(j["n"], "/phys/n");
  }

  void read_algo(const json& j, AlgoParams& a) const {
    object(j, "/algo", {"K", "kappa", "eps_max", "eps_check", "neighbor_radius_factor", "T_max",
                        "goal_tol", "Q", "R", "S", "rho", "zeta"});
    if (j.contains("K")) a.K = integer(j["K"], "/algo/K");
    if (j.contains("kappa")) a.kappa = integer(j["kappa"], "/algo/kappa");
    if (j.contains("eps_max")) a.eps_max = number(j["eps_max"], "/algo/eps_max");
    if (j.contains("eps_check")) a.eps_check = number(j["eps_check"], "/algo/eps_check");
    if (j.contains("neighbor_radius_factor"))
      a.neighbor_radius_factor = number(j["neighbor_radius_factor"], "/algo/neighbor_radius_factor");
    if (j.contains("T_max")) a.T_max = number(j["T_max"], "/algo/T_max");
    if (j.contains("goal_tol")) a.goal_tol = number(j["goal_tol"], "/algo/goal_tol");
    if (j.contains("Q")) a.Q = mat3(j["Q"], "/algo/Q");
    if (j.contains("R")) a.R = mat3(j["R"], "/algo/R");
    if (j.contains("S")) a.S = mat3(j["S"], "/algo/S");
    if (j.contains("rho")) a.rho_lin = number(j["rho"], "/algo/rho");
    if (j.contains("zeta")) a.zeta_quad = number(j["zeta"], "/algo/zeta");
  }

  void read_workspace(const json& j, PhysParams& p) const {
    object(j, "/workspace", {"min", "max"});
    if (!j.contains("min") || !j.contains("max")) fail("/workspace", "needs 'min' and 'max'");
    p.p_min = vec3(j["min"], "/workspace/min");
    p.p_max = vec3(j["max"], "/workspace/max");
  }
};

json parse_json(std::string_view text, const std::string& where) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
    int line = 1, col = 1;
    for (std::size_t i = 0; i < off && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw SchemaError(where + ":" + std::to_string(line) + ":" + std::to_string(col), msg);
  }
}

// Turns parameter invariant violations into schema errors anchored at the
// section they came from.
void validate_as_schema(const Scenario& s, const Reader& rd) {
  try {
    s.phys.validate();
  } catch (const ModelError& e) {
    rd.fail("/phys", e.what());
  }
  try {
    s.algo.validate();
  } catch (const ModelError& e) {
    rd.fail("/algo", e.what());
  }
  try {
    s.validate();
  } catch (const ModelError& e) {
    rd.fail("/agents", e.what());
  }
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

json mat_json(const Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) out.push_back(vec_json(m.row(r).transpose()));
  return out;
}

json phys_json(const PhysParams& p) {
  return {{"h", p.h},         {"Ts", p.Ts},   {"a_min", vec_json(p.a_min)}, {"a_max", vec_json(p.a_max)},
          {"r_min", p.r_min}, {"c", p.c_ellipsoid}, {"n", p.n_degree}};
}

json algo_json(const AlgoParams& a) {
  return {{"K", a.K},
          {"kappa", a.kappa},
          {"eps_max", a.eps_max},
          {"eps_check", a.eps_check},
          {"neighbor_radius_factor", a.neighbor_radius_factor},
          {"T_max", a.T_max},
          {"goal_tol", a.goal_tol},
          {"Q", mat_json(a.Q)},
          {"R", mat_json(a.R)},
          {"S", mat_json(a.S)},
          {"rho", a.rho_lin},
          {"zeta", a.zeta_quad}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write '" + path + "'");
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& where) {
  const json doc = parse_json(text, where);
  const PositionIndex index(text);
  const Reader rd{where, index};
  rd.object(doc, "", {"format", "id", "seed", "preset", "workspace", "phys", "algo", "agents"});
  if (!doc.contains("format")) rd.fail("", "missing 'format'");
  if (rd.integer(doc["format"], "/format") != kScenarioFormat)
    rd.fail("/format", "unsupported format version");

  Scenario s;
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) rd.fail("/preset", "expected a string");
    auto p = find_preset(doc["preset"].get<std::string>());
    if (!p) rd.fail("/preset", "unknown preset '" + doc["preset"].get<std::string>() + "'");
    s.phys = p->phys;
    s.algo = p->algo;
  }
  if (doc.contains("id")) {
    if (!doc["id"].is_string()) rd.fail("/id", "expected a string");
    s.id = doc["id"].get<std::string>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) rd.fail("/seed", "expected a non-negative integer");
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("workspace")) rd.read_workspace(doc["workspace"], s.phys);
  if (doc.contains("phys")) rd.read_phys(doc["phys"], s.phys);
  if (doc.contains("algo")) rd.read_algo(doc["algo"], s.algo);

  if (!doc.contains("agents")) rd.fail("", "missing 'agents'");
  const json& agents = doc["agents"];
  if (!agents.is_array()) rd.fail("/agents", "expected an array");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string ptr = "/agents/" + std::to_string(i);
    const json& a = rd.object(agents[i], ptr, {"start", "goal", "static"});
    if (!a.contains("start") || !a.contains("goal")) rd.fail(ptr, "needs 'start' and 'goal'");
    AgentSpec spec;
    spec.start = rd.vec3(a["start"], ptr + "/start");
    spec.goal = rd.vec3(a["goal"], ptr + "/goal");
    if (a.contains("static")) {
      if (!a["static"].is_boolean()) rd.fail(ptr + "/static", "expected a boolean");
      spec.is_static = a["static"].get<bool>();
    }
    s.agents.push_back(spec);
  }
  validate_as_schema(s, rd);
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json doc;
  doc["format"] = kScenarioFormat;
  doc["id"] = s.id;
  if (s.seed) doc["seed"] = *s.seed;
  doc["workspace"] = {{"min", vec_json(s.phys.p_min)}, {"max", vec_json(s.phys.p_max)}};
  doc["phys"] = phys_json(s.phys);
  doc["algo"] = algo_json(s.algo);
  doc["agents"] = json::array();
  for (const auto& a : s.agents)
    doc["agents"].push_back({{"start", vec_json(a.start)}, {"goal", vec_json(a.goal)}, {"static", a.is_static}});
  return doc.dump(2) + "\n";
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_file(path), path); }

void save_scenario(const Scenario& scenario, const std::string& path) {
  write_file(path, scenario_to_json(scenario));
}

void apply_config_override(Scenario& scenario, std::string_view patch, const std::string& where) {
  const json p = parse_json(patch, where);
  const PositionIndex index(patch);
  const Reader rd{where, index};
  rd.object(p, "", {"phys", "algo", "workspace"});
  // Merge onto a fully populated document so that the merged result is
  // checked by the same readers as a scenario file.
  json base = {{"workspace", {{"min", vec_json(scenario.phys.p_min)}, {"max", vec_json(scenario.phys.p_max)}}},
               {"phys", phys_json(scenario.phys)},
               {"algo", algo_json(scenario.algo)}};
  if (p.contains("phys")) rd.object(p["phys"], "/phys", {"h", "Ts", "a_min", "a_max", "r_min", "c", "n"});
  if (p.contains("algo"))
    rd.object(p["algo"], "/algo", {"K", "kappa", "eps_max", "eps_check", "neighbor_radius_factor", "T_max",
                                   "goal_tol", "Q", "R", "S", "rho", "zeta"});
  base.merge_patch(p);
  Scenario s = scenario;
  rd.read_workspace(base["workspace"], s.phys);
  rd.read_phys(base["phys"], s.phys);
  rd.read_algo(base["algo"], s.algo);
  validate_as_schema(s, rd);
  scenario = std::move(s);
}

Scenario generate_random_scenario(const GenerateOptions& o) {
  if (o.n < 1) throw GenerationError("n must be >= 1");
  Vec3 dims;
  if (o.density) {
    if (o.box) throw GenerationError("give either a box or a density, not both");
    if (!(*o.density > 0.0)) throw GenerationError("density must be positive");
    dims.setConstant(std::cbrt(static_cast<double>(o.n) / *o.density));
  } else if (o.box) {
    dims = *o.box;
    if (!(dims.array() > 0.0).all() || !dims.allFinite()) throw GenerationError("box edges must be positive");
  } else {
    throw GenerationError("need a box or a density");
  }

  PhysParams phys = o.phys;
  phys.p_min = -0.5 * dims;
  phys.p_max = 0.5 * dims;
  const double r = phys.r_min;
  const Vec3 theta = phys.theta();

  // Each point excludes a Theta-scaled ball of radius r; half-radius
  // ellipsoids around the points must pack into the box grown by one
  // half-radius on every side, at no better than the densest sphere packing.
  const double own_volume = 4.0 / 3.0 * std::numbers::pi * std::pow(r / 2.0, 3) * theta.prod();
  const double grown_volume = (dims + r * theta).prod();
  if (o.n * own_volume > 0.74 * grown_volume)
    throw GenerationError("packing infeasible: " + std::to_string(o.n) + " agents do not fit the box");

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> ux(phys.p_min.x(), phys.p_max.x());
  std::uniform_real_distribution<double> uy(phys.p_min.y(), phys.p_max.y());
  std::uniform_real_distribution<double> uz(phys.p_min.z(), phys.p_max.z());

  auto sample_set = [&](std::vector<Vec3>& pts) {
    pts.clear();
    for (int i = 0; i < o.n; ++i) {
      bool placed = false;
      for (int t = 0; t < o.point_attempts && !placed; ++t) {
        const Vec3 p(ux(rng), uy(rng), uz(rng));
        placed = true;
        for (const auto& q : pts)
          if (scaled_distance(p - q, phys) < r) {
            placed = false;
            break;
          }
        if (placed) pts.push_back(p);
      }
      if (!placed) return false;
    }
    return true;
  };

  std::vector<Vec3> starts, goals;
  for (int attempt = 0; attempt < o.restarts; ++attempt) {
    if (!sample_set(starts)) continue;
    if (!sample_set(goals)) continue;
    Scenario s;
    s.id = "random-n" + std::to_string(o.n) + "-s" + std::to_string(o.seed);
    s.phys = phys;
    s.algo = o.algo;
    s.seed = o.seed;
    for (int i = 0; i < o.n; ++i)
      s.agents.push_back({starts[static_cast<std::size_t>(i)], goals[static_cast<std::size_t>(i)], false});
    s.validate();
    return s;
  }
  throw GenerationError("could not place " + std::to_string(o.n) +
                        " agents with the required separation within the retry budget");
}

RunMetrics compute_metrics(const TransitionResult& result, const Scenario& scenario) {
  (void)scenario;
  RunMetrics m;
  m.success = result.success;
  m.reason = result.reason;
  m.transition_time = result.metrics.transition_time;
  m.wall_time = result.wall_time_s;
  m.travelled_distance = result.metrics.travelled_distance;
  m.straight_line_distance = result.metrics.straight_line_distance;
  m.min_scaled_distance = result.metrics.min_scaled_distance;
  m.goal_error = result.metrics.goal_error;
  m.steps = result.steps;
  m.gamma = result.gamma;
  m.qp_failures = result.qp_failures;
  m.max_kkt_residual = result.max_kkt_residual;
  return m;
}

std::string metrics_to_json(const RunMetrics& m, const TransitionResult* result) {
  json j = {{"success", m.success},
            {"reason", to_string(m.reason)},
            {"transition_time_s", m.transition_time},
            {"wall_time_s", m.wall_time},
            {"travelled_distance_m", m.travelled_distance},
            {"straight_line_distance_m", m.straight_line_distance},
            {"distance_ratio", m.distance_ratio()},
            {"min_scaled_distance", m.min_scaled_distance},
            {"goal_error_m", m.goal_error},
            {"steps", m.steps},
            {"gamma", m.gamma},
            {"qp_failures", m.qp_failures},
            {"max_kkt_residual", m.max_kkt_residual}};
  if (result) {
    if (result->collision.first) {
      const auto& v = *result->collision.first;
      j["first_violation"] = {{"agent_i", v.agent_i}, {"agent_j", v.agent_j}, {"t", v.t}, {"distance", v.distance}};
    }
    json steps = json::array();
    for (std::size_t k = 0; k < result->diagnostics.size(); ++k) {
      const auto& d = result->diagnostics[k];
      json n_c = json::array(), eps = json::array(), retries = json::array();
      for (const auto& a : d.agents) {
        n_c.push_back(a.n_c);
        eps.push_back(a.eps_min);
        retries.push_back(a.retries);
      }
      steps.push_back({{"step", k}, {"solve_time_s", d.solve_time_s}, {"n_c", n_c}, {"eps_min", eps},
                       {"retries", retries}});
    }
    j["diagnostics"] = std::move(steps);
  }
  return j.dump(2) + "\n";
}

void write_trajectory_csv(std::ostream& out, const InterpolatedTrajectory& traj) {
  out << "agent_id,t,px,py,pz,vx,vy,vz,ax,ay,az\n";
  char buf[512];
  for (std::size_t i = 0; i < traj.agents.size(); ++i) {
    for (const auto& s : traj.agents[i]) {
      std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", i, s.t,
                    s.p.x(), s.p.y(), s.p.z(), s.v.x(), s.v.y(), s.v.z(), s.a.x(), s.a.y(), s.a.z());
      out << buf;
    }
  }
}

void write_trajectory_csv(const std::string& path, const InterpolatedTrajectory& traj) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_trajectory_csv(out, traj);
  out.flush();
  if (!out) throw IoError("cannot write '" + path + "'");
}

InterpolatedTrajectory read_trajectory_csv(std::istream& in, const std::string& where) {
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  auto fail = [&](int line, const std::string& what) -> void {
    throw SchemaError(where + ":" + std::to_string(line), what);
  };
  if (text.empty()) fail(1, "empty file");
  if (text.back() != '\n') {
    const int lines = static_cast<int>(std::count(text.begin(), text.end(), '\n')) + 1;
    fail(lines, "truncated row (missing final newline)");
  }

  InterpolatedTrajectory traj;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  std::getline(lines, line);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "agent_id,t,px,py,pz,vx,vy,vz,ax,ay,az") fail(1, "unexpected header");

  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) fail(lineno, "empty row");
    double f[11];
    std::size_t start = 0;
    int count = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (count >= 11) fail(lineno, "too many fields");
      char* end = nullptr;
      f[count] = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(f[count]))
        fail(lineno, "field " + std::to_string(count + 1) + " is not a number");
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (count != 11) fail(lineno, "expected 11 fields, got " + std::to_string(count));
    if (f[0] < 0 || f[0] != std::floor(f[0])) fail(lineno, "agent_id must be a non-negative integer");
    const auto id = static_cast<std::size_t>(f[0]);
    if (id == traj.agents.size()) {
      traj.agents.emplace_back();
    } else if (id + 1 != traj.agents.size()) {
      fail(lineno, "rows must be grouped by agent in increasing id order");
    }
    auto& rows = traj.agents.back();
    if (!rows.empty() && !(f[1] > rows.back().t)) fail(lineno, "time must increase within an agent");
    Sample s;
    s.t = f[1];
    s.p = Vec3(f[2], f[3], f[4]);
    s.v = Vec3(f[5], f[6], f[7]);
    s.a = Vec3(f[8], f[9], f[10]);
    rows.push_back(s);
  }
  if (traj.agents.empty()) fail(lineno, "no samples");
  for (std::size_t i = 1; i < traj.agents.size(); ++i)
    if (traj.agents[i].size() != traj.agents[0].size())
      fail(lineno, "agent " + std::to_string(i) + " has a different number of samples");
  if (traj.agents[0].size() > 1) traj.Ts = traj.agents[0][1].t - traj.agents[0][0].t;
  return traj;
}

InterpolatedTrajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_trajectory_csv(in, path);
}

CheckReport check_trajectory(const InterpolatedTrajectory& traj, const Scenario& scenario) {
  CheckReport rep;
  std::ostringstream msg;
  if (static_cast<int>(traj.agents.size()) != scenario.size()) {
    msg << "trajectory has " << traj.agents.size() << " agents, scenario has " << scenario.size();
    rep.message = msg.str();
    return rep;
  }
  rep.collision = check_collisions(traj, scenario.phys.r_min, scenario.algo.eps_check, scenario.phys);
  for (int i = 0; i < scenario.size(); ++i) {
    const auto& rows = traj.agents[static_cast<std::size_t>(i)];
    if (rows.empty() || (rows.back().p - scenario.agents[static_cast<std::size_t>(i)].goal).norm() > scenario.algo.goal_tol)
      rep.agents_off_goal.push_back(i);
  }
  rep.pass = rep.collision.pass && rep.agents_off_goal.empty();
  if (rep.collision.first) {
    const auto& v = *rep.collision.first;
    msg << "collision: agents " << v.agent_i << " and " << v.agent_j << " at t=" << v.t
        << " s, scaled distance " << v.distance << " < " << scenario.phys.r_min - scenario.algo.eps_check << "\n";
  }
  for (int i : rep.agents_off_goal) msg << "agent " << i << " does not end at its goal\n";
  if (rep.pass) msg << "pass: min scaled distance " << rep.collision.closest.distance << "\n";
  rep.message = msg.str();
  return rep;
}

}  // namespace dmpc
