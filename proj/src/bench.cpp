#include "overtake/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace overtake {

namespace {

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

double percent(int part, int whole) {
  return whole > 0 ? 100.0 * part / whole : 0.0;
}

}  // namespace

MetricsTable summarize(const std::vector<EpisodeResult>& results, std::string policy) {
  MetricsTable m;
  m.policy = std::move(policy);
  m.episodes = static_cast<int>(results.size());
  double completion_sum = 0.0, v1_sum = 0.0, v2_sum = 0.0;
  int failures = 0, failures_with_npc2 = 0;
  for (const auto& r : results) {
    switch (r.outcome) {
      case Outcome::Success:
        ++m.successes;
        completion_sum += r.completion_time.value_or(r.end_time);
        continue;
      case Outcome::Crash:
        ++m.crashes;
        if (r.crash_npc_id == 1) ++m.crashes_npc1;
        if (r.crash_npc_id == 2) ++m.crashes_npc2;
        if (r.crash_npc_id == 3) ++m.crashes_npc3;
        break;
      case Outcome::OffRoad: ++m.off_road; break;
      case Outcome::Timeout: ++m.timeouts; break;
    }
    ++failures;
    v1_sum += r.v1;
    if (r.npc_count >= 2) {
      v2_sum += r.v2;
      ++failures_with_npc2;
    }
  }
  m.success_rate = percent(m.successes, m.episodes);
  m.completion_time_defined = m.successes > 0;
  m.mean_completion_time = m.successes ? completion_sum / m.successes : 0.0;
  m.crash_shares_defined = m.crashes > 0;
  m.crash_share_npc1 = percent(m.crashes_npc1, m.crashes);
  m.crash_share_npc2 = percent(m.crashes_npc2, m.crashes);
  m.crash_share_npc3 = percent(m.crashes_npc3, m.crashes);
  m.mean_v1_in_failures = failures ? v1_sum / failures : 0.0;
  m.mean_v2_in_failures = failures_with_npc2 ? v2_sum / failures_with_npc2 : 0.0;
  return m;
}

std::pair<MetricsTable, MetricsTable> aggregate_metrics(const std::vector<EpisodeResult>& a,
                                                        const std::vector<EpisodeResult>& b,
                                                        std::string name_a, std::string name_b) {
  std::map<int, const EpisodeResult*> by_id_a, by_id_b;
  for (const auto& r : a) by_id_a[r.scenario_id] = &r;
  for (const auto& r : b) by_id_b[r.scenario_id] = &r;
  if (by_id_a.size() != a.size() || by_id_b.size() != b.size())
    throw std::invalid_argument("aggregate_metrics: duplicate scenario ids");
  if (by_id_a.size() != by_id_b.size() ||
      !std::equal(by_id_a.begin(), by_id_a.end(), by_id_b.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; }))
    throw std::invalid_argument("aggregate_metrics: the two result sets cover different scenario ids");

  // Fold in id order so the result does not depend on input ordering.
  std::vector<EpisodeResult> sorted_a, sorted_b;
  int both_failed = 0;
  for (const auto& [id, ra] : by_id_a) {
    const EpisodeResult* rb = by_id_b.at(id);
    sorted_a.push_back(*ra);
    sorted_b.push_back(*rb);
    both_failed += ra->outcome != Outcome::Success && rb->outcome != Outcome::Success;
  }
  MetricsTable ma = summarize(sorted_a, std::move(name_a));
  MetricsTable mb = summarize(sorted_b, std::move(name_b));
  ma.crash_overlap = mb.crash_overlap = percent(both_failed, static_cast<int>(sorted_a.size()));
  return {ma, mb};
}

std::string metrics_text(const std::vector<MetricsTable>& tables) {
  std::ostringstream out;
  auto row = [&](const std::string& label, auto&& value) {
    out << label;
    for (std::size_t i = label.size(); i < 46; ++i) out << ' ';
    for (const auto& t : tables) {
      const std::string v = value(t);
      for (std::size_t i = v.size(); i < 14; ++i) out << ' ';
      out << v;
    }
    out << '\n';
  };
  row("", [](const MetricsTable& t) { return t.policy; });
  row("Episodes", [](const MetricsTable& t) { return std::to_string(t.episodes); });
  row("Successful overtaking (%)", [](const MetricsTable& t) { return fixed2(t.success_rate); });
  row("Completion time of successes (s)", [](const MetricsTable& t) {
    return t.completion_time_defined ? fixed2(t.mean_completion_time) : std::string("n/a");
  });
  auto share = [](double MetricsTable::*field) {
    return [field](const MetricsTable& t) {
      return t.crash_shares_defined ? fixed2(t.*field) : std::string("n/a");
    };
  };
  row("Crash with NPC1 (% of crashes)", share(&MetricsTable::crash_share_npc1));
  row("Crash with NPC2 (% of crashes)", share(&MetricsTable::crash_share_npc2));
  row("Crash with NPC3 (% of crashes)", share(&MetricsTable::crash_share_npc3));
  row("Failed in same scenarios (%)", [](const MetricsTable& t) { return fixed2(t.crash_overlap); });
  row("Average speed of NPC1 in failures (m/s)",
      [](const MetricsTable& t) { return fixed2(t.mean_v1_in_failures); });
  row("Average speed of NPC2 in failures (m/s)",
      [](const MetricsTable& t) { return fixed2(t.mean_v2_in_failures); });
  row("Crashes / off-road / timeouts", [](const MetricsTable& t) {
    return std::to_string(t.crashes) + "/" + std::to_string(t.off_road) + "/" +
           std::to_string(t.timeouts);
  });
  return out.str();
}

std::string metrics_jsonl(const std::vector<MetricsTable>& tables) {
  std::string out;
  for (const auto& t : tables) {
    nlohmann::ordered_json j;
    j["policy"] = t.policy;
    j["episodes"] = t.episodes;
    j["successes"] = t.successes;
    j["crashes"] = t.crashes;
    j["off_road"] = t.off_road;
    j["timeouts"] = t.timeouts;
    j["crashes_npc1"] = t.crashes_npc1;
    j["crashes_npc2"] = t.crashes_npc2;
    j["crashes_npc3"] = t.crashes_npc3;
    j["success_rate_pct"] = t.success_rate;
    j["completion_time_defined"] = t.completion_time_defined;
    j["mean_completion_time_s"] = t.mean_completion_time;
    j["crash_shares_defined"] = t.crash_shares_defined;
    j["crash_share_npc1_pct"] = t.crash_share_npc1;
    j["crash_share_npc2_pct"] = t.crash_share_npc2;
    j["crash_share_npc3_pct"] = t.crash_share_npc3;
    j["crash_overlap_pct"] = t.crash_overlap;
    j["mean_v1_in_failures_mps"] = t.mean_v1_in_failures;
    j["mean_v2_in_failures_mps"] = t.mean_v2_in_failures;
    out += j.dump() + "\n";
  }
  return out;
}

void DecisionMapSpec::validate() const {
  if (resolution_npc1 < 2 || resolution_npc2 < 2)
    throw std::invalid_argument("map resolution must be >= 2 per axis");
  if (!(npc1_s.min <= npc1_s.max) || !(npc2_s.min <= npc2_s.max))
    throw std::invalid_argument("map ranges need min <= max");
}

WorldState decision_map_world(const DecisionMapSpec& spec, double npc1_s, double npc2_s,
                              const EpisodeConfig& cfg) {
  const RoadModel& road = cfg.world.road;
  WorldState w;
  w.ego = spec.ego;
  Npc n1;
  n1.id = 1;
  n1.lane = Lane::Ego;
  n1.target_speed = spec.v1;
  n1.state.s = npc1_s;
  n1.state.d = road.ego_lane_center_d();
  n1.state.speed = spec.v1;
  n1.state.length = cfg.vehicle_length;
  n1.state.width = cfg.vehicle_width;
  Npc n2;
  n2.id = 2;
  n2.lane = Lane::Opposite;
  n2.target_speed = spec.v2;
  n2.state.s = npc2_s;
  n2.state.d = road.opposite_lane_center_d();
  n2.state.heading = std::numbers::pi;
  n2.state.speed = spec.v2;
  n2.state.length = cfg.vehicle_length;
  n2.state.width = cfg.vehicle_width;
  w.npcs = {n1, n2};
  return w;
}

DecisionMap decision_map(const QNet& net, const DecisionMapSpec& spec, const EpisodeConfig& cfg) {
  spec.validate();
  DecisionMap map;
  auto axis = [](const Range& r, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = r.min + (r.max - r.min) * i / (n - 1);
    return v;
  };
  map.npc1_s = axis(spec.npc1_s, spec.resolution_npc1);
  map.npc2_s = axis(spec.npc2_s, spec.resolution_npc2);
  map.actions.resize(spec.resolution_npc2, spec.resolution_npc1);

  Eigen::MatrixXd obs(cfg.observation.dimension(),
                      static_cast<Eigen::Index>(map.npc1_s.size() * map.npc2_s.size()));
  Eigen::Index col = 0;
  for (double s2 : map.npc2_s)
    for (double s1 : map.npc1_s)
      obs.col(col++) = encode_observation(decision_map_world(spec, s1, s2, cfg), cfg.world.road,
                                          cfg.observation)
                           .features(cfg.observation);
  const Eigen::MatrixXd q = net.forward(obs);
  col = 0;
  for (Eigen::Index r = 0; r < map.actions.rows(); ++r)
    for (Eigen::Index c = 0; c < map.actions.cols(); ++c)
      map.actions(r, c) = argmax_action(q.col(col++));
  return map;
}

void write_decision_map_csv(std::ostream& out, const DecisionMap& map) {
  out << "npc2_s\\npc1_s";
  for (double s1 : map.npc1_s) out << ',' << fixed6(s1);
  out << '\n';
  for (Eigen::Index r = 0; r < map.actions.rows(); ++r) {
    out << fixed6(map.npc2_s[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < map.actions.cols(); ++c) out << ',' << map.actions(r, c);
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace)
    out << fixed6(r.t) << ',' << fixed6(r.s) << ',' << fixed6(r.d) << ',' << fixed6(r.steering)
        << ',' << fixed6(r.speed) << ',' << r.action << ',' << r.rollout_id << '\n';
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw std::runtime_error("trace: missing or unexpected header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    TraceRow r;
    if (!(ls >> r.t >> r.s >> r.d >> r.steering >> r.speed >> r.action >> r.rollout_id))
      throw std::runtime_error("trace: malformed row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

void export_trace(const EpisodeResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace_csv(out, result.trace);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<std::pair<std::size_t, std::size_t>> lateral_excursions(
    const std::vector<TraceRow>& trace, double threshold) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  bool inside = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool above = trace[i].d > threshold;
    if (above && !inside) start = i;
    if (!above && inside) out.emplace_back(start, i - 1);
    inside = above;
  }
  if (inside) out.emplace_back(start, trace.size() - 1);
  return out;
}

void write_scenarios(std::ostream& out, const std::vector<ScenarioSpec>& specs) {
  for (const auto& s : specs) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["d1_m"] = s.d1;
    j["d2_m"] = s.d2;
    j["v1_mps"] = s.v1;
    j["v2_mps"] = s.v2;
    j["npc_count"] = s.npc_count;
    j["d3_m"] = s.d3;
    j["v3_mps"] = s.v3;
    j["seed"] = s.seed;
    out << j.dump() << '\n';
  }
}

std::vector<ScenarioSpec> read_scenarios(std::istream& in) {
  static const std::set<std::string> known{"id",        "d1_m", "d2_m",   "v1_mps", "v2_mps",
                                           "npc_count", "d3_m", "v3_mps", "seed"};
  std::vector<ScenarioSpec> specs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw std::runtime_error("unknown field '" + key + "'");
      ScenarioSpec s;
      s.id = j.at("id").get<int>();
      s.d1 = j.at("d1_m").get<double>();
      s.d2 = j.at("d2_m").get<double>();
      s.v1 = j.at("v1_mps").get<double>();
      s.v2 = j.at("v2_mps").get<double>();
      s.npc_count = j.at("npc_count").get<int>();
      s.d3 = j.value("d3_m", s.d3);
      s.v3 = j.value("v3_mps", s.v3);
      s.seed = j.at("seed").get<std::uint64_t>();
      s.validate();
      specs.push_back(s);
    } catch (const std::exception& e) {
      throw std::runtime_error("scenario file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return specs;
}

void write_learning_curve(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "episode,scenario_id,end_iteration,steps,return,discounted_return,outcome,epsilon,mean_loss\n";
  for (const auto& p : curve)
    out << p.episode << ',' << p.scenario_id << ',' << p.end_iteration << ',' << p.steps << ','
        << fixed6(p.episode_return) << ',' << fixed6(p.discounted_return) << ','
        << outcome_name(p.outcome) << ',' << fixed6(p.epsilon) << ',' << fixed6(p.mean_loss)
        << '\n';
}

}  // namespace overtake

namespace overtake {

ScenarioSpec scripted_abort_scenario() {
  ScenarioSpec s;
  s.id = 0;
  s.d1 = 20.0;
  s.v1 = 2.0;
  s.d2 = 60.0;
  s.v2 = 2.5;
  s.npc_count = 2;
  s.seed = 0;
  return s;
}

std::unique_ptr<Policy> make_abort_schedule(const AbortScheduleConfig& cfg) {
  enum class Phase { Follow, Overtake, Abort, Wait, Pass };
  auto phase = std::make_shared<Phase>(Phase::Follow);
  return std::make_unique<FunctionPolicy>([phase, cfg](const WorldState& w) {
    const VehicleState& ego = w.ego;
    double leader_gap = std::numeric_limits<double>::infinity();
    double oncoming = std::numeric_limits<double>::infinity();
    for (const auto& npc : w.npcs) {
      const double ds = npc.state.s - ego.s;
      if (npc.lane == Lane::Ego && ds > 0.0)
        leader_gap = std::min(leader_gap, ds - 0.5 * (ego.length + npc.state.length));
      if (npc.lane == Lane::Opposite && ds > -0.5 * (ego.length + npc.state.length))
        oncoming = std::min(oncoming, ds);
    }
    switch (*phase) {
      case Phase::Follow:
        if (leader_gap < cfg.start_gap) *phase = Phase::Overtake;
        break;
      case Phase::Overtake:
        if (oncoming < cfg.abort_distance) *phase = Phase::Abort;
        break;
      case Phase::Abort:
        if (std::abs(ego.d) < cfg.returned_d) *phase = Phase::Wait;
        break;
      case Phase::Wait:
        if (!std::isfinite(oncoming)) *phase = Phase::Pass;
        break;
      case Phase::Pass:
        break;
    }
    switch (*phase) {
      case Phase::Overtake:
      case Phase::Pass: return Action::Overtaking;
      case Phase::Abort: return Action::Aborting;
      default: return Action::Following;
    }
  });
}

}  // namespace overtake
