#pragma once

#include <utility>

#include "overtake/action.hpp"
#include "overtake/road_world.hpp"

namespace overtake {

/// Thresholds of the commit-to-lane-change baseline.
struct BaselineConfig {
  double trigger_gap = 25.0;   // bumper gap to a slower leader that starts an overtake
  double clear_margin = 8.0;   // ego must lead the passed vehicle by this much (rear to front)
  double target_speed = 3.5;   // leaders slower than this are overtaken

  void validate() const;
};

struct BaselineState {
  enum class Phase : std::uint8_t { LaneKeep, CommittedOvertake };

  Phase phase = Phase::LaneKeep;
  double overtake_start_s = 0.0;
  int passing_npc_id = -1;

  bool operator==(const BaselineState&) const = default;
};

/// Lane keeping until a slow leader is close, then an overtake that is never
/// abandoned. Never returns Action::Aborting.
std::pair<Action, BaselineState> rule_based_decide(const WorldState& world,
                                                   const BaselineState& state,
                                                   const BaselineConfig& cfg);

}  // namespace overtake
