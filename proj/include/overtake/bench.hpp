#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "overtake/episode.hpp"
#include "overtake/trainer.hpp"

namespace overtake {

/// Aggregates over one policy's evaluation set. Crash shares are taken over
/// collisions only; off-road and timeout episodes are counted separately.
struct MetricsTable {
  std::string policy;
  int episodes = 0;
  int successes = 0;
  int crashes = 0;
  int off_road = 0;
  int timeouts = 0;
  int crashes_npc1 = 0;
  int crashes_npc2 = 0;
  int crashes_npc3 = 0;

  double success_rate = 0.0;  // %
  bool completion_time_defined = false;
  double mean_completion_time = 0.0;  // s, successes only
  bool crash_shares_defined = false;
  double crash_share_npc1 = 0.0;  // %
  double crash_share_npc2 = 0.0;  // %
  double crash_share_npc3 = 0.0;  // %
  double crash_overlap = 0.0;     // % of scenarios failed by both policies
  double mean_v1_in_failures = 0.0;
  double mean_v2_in_failures = 0.0;

  /// Share of crashes with oncoming vehicles (NPC2 or NPC3).
  double crash_share_oncoming() const { return crash_share_npc2 + crash_share_npc3; }
};

MetricsTable summarize(const std::vector<EpisodeResult>& results, std::string policy = {});

/// Paired comparison over the same scenario ids. Throws std::invalid_argument
/// when the id sets differ.
std::pair<MetricsTable, MetricsTable> aggregate_metrics(const std::vector<EpisodeResult>& a,
                                                        const std::vector<EpisodeResult>& b,
                                                        std::string name_a = "a",
                                                        std::string name_b = "b");

std::string metrics_text(const std::vector<MetricsTable>& tables);
/// One JSON object per line per table.
std::string metrics_jsonl(const std::vector<MetricsTable>& tables);

struct DecisionMapSpec {
  Range npc1_s{5.0, 60.0};
  Range npc2_s{5.0, 120.0};
  int resolution_npc1 = 50;
  int resolution_npc2 = 50;
  double v1 = 2.0;
  double v2 = 2.0;
  VehicleState ego{0.0, 0.0, 0.0, 3.0};

  void validate() const;
};

struct DecisionMap {
  std::vector<double> npc1_s;
  std::vector<double> npc2_s;
  Eigen::MatrixXi actions;  // rows follow npc2_s, columns npc1_s
};

/// World with NPC1 in the ego lane at `npc1_s` and NPC2 oncoming at `npc2_s`.
WorldState decision_map_world(const DecisionMapSpec& spec, double npc1_s, double npc2_s,
                              const EpisodeConfig& cfg);

DecisionMap decision_map(const QNet& net, const DecisionMapSpec& spec, const EpisodeConfig& cfg);

void write_decision_map_csv(std::ostream& out, const DecisionMap& map);

inline constexpr const char* kTraceHeader = "t_s,s_m,d_m,steering_rad,speed_mps,action,rollout_id";

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);
std::vector<TraceRow> read_trace_csv(std::istream& in);
/// Throws std::runtime_error when the file cannot be written.
void export_trace(const EpisodeResult& result, const std::string& path);

/// Intervals of consecutive rows whose lateral offset exceeds `threshold`.
std::vector<std::pair<std::size_t, std::size_t>> lateral_excursions(
    const std::vector<TraceRow>& trace, double threshold);

void write_scenarios(std::ostream& out, const std::vector<ScenarioSpec>& specs);
std::vector<ScenarioSpec> read_scenarios(std::istream& in);

void write_learning_curve(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace overtake

namespace overtake {

/// Slow NPC1 close ahead, NPC2 oncoming so that an overtake started right
/// away has to be abandoned, and a free opposite lane once NPC2 has passed.
ScenarioSpec scripted_abort_scenario();

struct AbortScheduleConfig {
  double start_gap = 12.0;      // leader gap that starts an overtake
  double abort_distance = 40.0; // oncoming vehicle this close aborts
  double returned_d = 0.3;      // back in lane below this offset
};

/// Hand-specified decision schedule: follow, overtake, abort when an oncoming
/// vehicle gets close, follow until it passes, then overtake again.
std::unique_ptr<Policy> make_abort_schedule(const AbortScheduleConfig& cfg = {});

}  // namespace overtake
