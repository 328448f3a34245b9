#include "overtake/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace overtake {

namespace {

struct Entry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

template <typename Int>
Int parse_int(const std::string& v) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw std::invalid_argument("not an integer");
  return x;
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_int<int>(trim(item)));
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

template <typename Accessor>
Entry real(Accessor field) {
  return {[field](RunConfig& c, const std::string& v) { field(c) = parse_double(v); },
          [field](const RunConfig& c) { return format_double(field(const_cast<RunConfig&>(c))); }};
}

template <typename Int, typename Accessor>
Entry integer(Accessor field) {
  return {[field](RunConfig& c, const std::string& v) { field(c) = parse_int<Int>(v); },
          [field](const RunConfig& c) {
            return std::to_string(field(const_cast<RunConfig&>(c)));
          }};
}

template <typename Accessor>
Entry int_list(Accessor field) {
  return {[field](RunConfig& c, const std::string& v) { field(c) = parse_int_list(v); },
          [field](const RunConfig& c) {
            return format_int_list(field(const_cast<RunConfig&>(c)));
          }};
}

#define OVT_REAL(key, expr) {key, real([](RunConfig& c) -> double& { return c.expr; })}
#define OVT_INT(T, key, expr) {key, integer<T>([](RunConfig& c) -> T& { return c.expr; })}
#define OVT_LIST(key, expr) {key, int_list([](RunConfig& c) -> std::vector<int>& { return c.expr; })}

const std::vector<std::pair<std::string, Entry>>& registry() {
  static const std::vector<std::pair<std::string, Entry>> entries = {
      OVT_REAL("road.length", episode.world.road.length),
      OVT_REAL("road.lane_width", episode.world.road.lane_width),
      OVT_REAL("road.goal_s", episode.world.road.goal_s),
      OVT_REAL("vehicle.wheelbase", episode.world.limits.wheelbase),
      OVT_REAL("vehicle.steering_max", episode.world.limits.steering_max),
      OVT_REAL("vehicle.v_max", episode.world.limits.v_max),
      OVT_REAL("vehicle.length", episode.vehicle_length),
      OVT_REAL("vehicle.width", episode.vehicle_width),
      OVT_REAL("world.dt", episode.world.dt),
      OVT_REAL("world.t_max", episode.world.t_max),
      OVT_REAL("episode.decision_period", episode.decision_period),
      OVT_REAL("episode.ego_initial_speed", episode.ego_initial_speed),
      OVT_REAL("planner.horizon", episode.planner.horizon),
      OVT_REAL("planner.transition_length", episode.planner.transition_length),
      OVT_REAL("planner.waypoint_spacing", episode.planner.waypoint_spacing),
      OVT_REAL("planner.w_collision", episode.planner.w_collision),
      OVT_REAL("planner.w_transition", episode.planner.w_transition),
      OVT_REAL("planner.w_center", episode.planner.w_center),
      OVT_REAL("planner.clearance_scale", episode.planner.clearance_scale),
      OVT_REAL("planner.overlap_cost", episode.planner.overlap_cost),
      OVT_REAL("planner.min_prediction_speed", episode.planner.min_prediction_speed),
      OVT_REAL("planner.lookahead", episode.planner.lookahead),
      OVT_REAL("planner.k_v", episode.planner.k_v),
      OVT_REAL("planner.k_g", episode.planner.k_g),
      OVT_REAL("planner.k_speed", episode.planner.k_speed),
      OVT_REAL("planner.v_follow", episode.planner.v_follow),
      OVT_REAL("planner.accel_follow", episode.planner.accel_follow),
      OVT_INT(int, "planner.rollout_number", episode.planner.rollout_number),
      OVT_REAL("planner.v_overtake", episode.planner.v_overtake),
      OVT_REAL("planner.accel_overtake", episode.planner.accel_overtake),
      OVT_INT(int, "planner.rollout_number_overtake", episode.planner.rollout_number_overtake),
      OVT_REAL("planner.v_abort", episode.planner.v_abort),
      OVT_REAL("planner.accel_abort", episode.planner.accel_abort),
      OVT_REAL("planner.following_distance", episode.planner.following_distance),
      OVT_REAL("planner.avoiding_distance", episode.planner.avoiding_distance),
      OVT_INT(int, "observation.slots", episode.observation.slots),
      OVT_REAL("observation.far_distance", episode.observation.far_distance),
      OVT_REAL("observation.speed_scale", episode.observation.speed_scale),
      OVT_REAL("observation.distance_scale", episode.observation.distance_scale),
      OVT_REAL("observation.lateral_scale", episode.observation.lateral_scale),
      OVT_REAL("observation.yaw_rate_scale", episode.observation.yaw_rate_scale),
      OVT_REAL("reward.w_progress", episode.reward.w_progress),
      OVT_REAL("reward.goal_bonus", episode.reward.goal_bonus),
      OVT_REAL("reward.crash_penalty", episode.reward.crash_penalty),
      OVT_REAL("reward.switch_penalty", episode.reward.switch_penalty),
      OVT_REAL("train.gamma", train.gamma),
      OVT_REAL("train.learning_rate", train.learning_rate),
      OVT_INT(int, "train.batch_size", train.batch_size),
      OVT_INT(int, "train.target_sync_period", train.target_sync_period),
      OVT_REAL("train.epsilon_start", train.epsilon_start),
      OVT_REAL("train.epsilon_end", train.epsilon_end),
      OVT_REAL("train.epsilon_decay_fraction", train.epsilon_decay_fraction),
      OVT_INT(std::int64_t, "train.iterations", train.iterations),
      OVT_INT(std::int64_t, "train.learning_starts", train.learning_starts),
      OVT_INT(std::size_t, "train.buffer_capacity", train.buffer_capacity),
      OVT_REAL("train.grad_clip", train.grad_clip),
      OVT_LIST("train.hidden", train.hidden),
      OVT_REAL("baseline.trigger_gap", baseline.trigger_gap),
      OVT_REAL("baseline.clear_margin", baseline.clear_margin),
      OVT_REAL("baseline.target_speed", baseline.target_speed),
      OVT_REAL("ranges.d1_min", ranges.d1.min),
      OVT_REAL("ranges.d1_max", ranges.d1.max),
      OVT_REAL("ranges.d2_min", ranges.d2.min),
      OVT_REAL("ranges.d2_max", ranges.d2.max),
      OVT_REAL("ranges.v1_min", ranges.v1.min),
      OVT_REAL("ranges.v1_max", ranges.v1.max),
      OVT_REAL("ranges.v2_min", ranges.v2.min),
      OVT_REAL("ranges.v2_max", ranges.v2.max),
      OVT_REAL("ranges.d3_min", ranges.d3.min),
      OVT_REAL("ranges.d3_max", ranges.d3.max),
      OVT_REAL("ranges.v3_min", ranges.v3.min),
      OVT_REAL("ranges.v3_max", ranges.v3.max),
      OVT_LIST("ranges.npc_counts", ranges.npc_counts),
      OVT_INT(std::uint64_t, "run.seed", seed),
      {"run.output_dir",
       Entry{[](RunConfig& c, const std::string& v) { c.output_dir = v; },
             [](const RunConfig& c) { return c.output_dir; }}},
  };
  return entries;
}

#undef OVT_REAL
#undef OVT_INT
#undef OVT_LIST

const Entry& lookup(const std::string& key) {
  for (const auto& [k, e] : registry())
    if (k == key) return e;
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  try {
    episode.validate();
    train.validate();
    baseline.validate();
    ranges.validate();
    if (episode.gamma != train.gamma)
      throw std::invalid_argument("episode gamma must equal train.gamma");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Entry& e = lookup(key);
  try {
    e.set(cfg, trim(value));
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  }
  if (key == "train.gamma") cfg.episode.gamma = cfg.train.gamma;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, e] : registry()) keys.push_back(k);
  return keys;
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  return lookup(key).get(cfg);
}

void parse_config(std::istream& in, RunConfig& cfg) {
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    set_config_value(cfg, key, line.substr(eq + 1));
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  RunConfig cfg;
  parse_config(in, cfg);
  return cfg;
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& [k, e] : registry()) out << k << " = " << e.get(cfg) << '\n';
}

}  // namespace overtake
