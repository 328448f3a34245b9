#include "overtake/baseline_policy.hpp"

#include <cmath>
#include <stdexcept>

namespace overtake {

void BaselineConfig::validate() const {
  if (!(std::isfinite(trigger_gap) && trigger_gap > 0.0))
    throw std::invalid_argument("baseline.trigger_gap must be > 0");
  if (!(std::isfinite(clear_margin) && clear_margin >= 0.0))
    throw std::invalid_argument("baseline.clear_margin must be >= 0");
  if (!(std::isfinite(target_speed) && target_speed > 0.0))
    throw std::invalid_argument("baseline.target_speed must be > 0");
}

std::pair<Action, BaselineState> rule_based_decide(const WorldState& world,
                                                   const BaselineState& state,
                                                   const BaselineConfig& cfg) {
  const VehicleState& ego = world.ego;
  BaselineState next = state;

  if (state.phase == BaselineState::Phase::CommittedOvertake) {
    const Npc* passed = world.find_npc(state.passing_npc_id);
    const bool clear =
        !passed || ego.s - passed->state.s >=
                       cfg.clear_margin + 0.5 * (ego.length + passed->state.length);
    if (!clear) return {Action::Overtaking, next};
    next = BaselineState{};
  }

  const Npc* leader = nullptr;
  double leader_gap = 0.0;
  for (const auto& npc : world.npcs) {
    if (npc.lane != Lane::Ego || npc.state.s <= ego.s) continue;
    const double gap = npc.state.s - ego.s - 0.5 * (ego.length + npc.state.length);
    if (!leader || gap < leader_gap) {
      leader = &npc;
      leader_gap = gap;
    }
  }
  if (leader && leader_gap < cfg.trigger_gap && leader->state.speed < cfg.target_speed) {
    next.phase = BaselineState::Phase::CommittedOvertake;
    next.overtake_start_s = ego.s;
    next.passing_npc_id = leader->id;
    return {Action::Overtaking, next};
  }
  return {Action::Following, next};
}

}  // namespace overtake
