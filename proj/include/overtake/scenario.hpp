#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace overtake {

/// Randomised initial condition of one overtaking episode. NPC1 leads in the
/// ego lane; NPC2 (and NPC3 when npc_count == 3) approach in the opposite lane.
struct ScenarioSpec {
  int id = 0;
  double d1 = 40.0;  // ego to NPC1, m
  double d2 = 60.0;  // NPC1 to NPC2, m
  double v1 = 2.0;   // m/s
  double v2 = 2.0;   // m/s
  int npc_count = 2;
  double d3 = 40.0;  // NPC2 to NPC3, m
  double v3 = 2.0;   // m/s
  std::uint64_t seed = 0;

  bool operator==(const ScenarioSpec&) const = default;
  void validate() const;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool contains(double x) const { return x >= min && x <= max; }
};

struct ParameterRanges {
  Range d1{20.0, 60.0};
  Range d2{30.0, 120.0};
  Range v1{1.0, 3.0};
  Range v2{1.0, 3.0};
  Range d3{20.0, 60.0};
  Range v3{1.0, 3.0};
  std::vector<int> npc_counts{1, 2, 3};

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool contains(const ScenarioSpec& spec) const;
};

/// Seed of the independent random stream owned by scenario `id`.
std::uint64_t scenario_stream_seed(std::uint64_t master_seed, std::uint64_t id);

/// Every scenario draws its fields from its own stream, so a scenario depends
/// only on (ranges, master seed, id).
std::vector<ScenarioSpec> generate_scenarios(std::size_t n, const ParameterRanges& ranges,
                                             std::uint64_t seed);

enum class Outcome : std::uint8_t { Success, Crash, OffRoad, Timeout };

std::string outcome_name(Outcome o);

}  // namespace overtake
