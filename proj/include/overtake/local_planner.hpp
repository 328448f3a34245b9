#pragma once

#include <optional>
#include <vector>

#include "overtake/action.hpp"
#include "overtake/road_world.hpp"

namespace overtake {

/// Fixed planner tuning plus the per-action parameter sets that the
/// high-level decision switches between.
struct PlannerConfig {
  double horizon = 50.0;
  double transition_length = 15.0;
  double waypoint_spacing = 0.5;

  double w_collision = 10.0;
  double w_transition = 0.5;
  double w_center = 1.0;
  double clearance_scale = 1.0;  // sigma of the exp(-clearance / sigma) penalty
  double overlap_cost = 1000.0;  // per predicted overlapping (waypoint, NPC) pair
  double min_prediction_speed = 0.5;

  double lookahead = 4.0;
  double k_v = 0.8;
  double k_g = 0.3;
  double k_speed = 1.0;  // free-road speed tracking gain

  // Following
  double v_follow = 3.5;
  double accel_follow = 1.5;
  int rollout_number = 7;
  // Overtaking
  double v_overtake = 4.0;
  double accel_overtake = 2.0;
  int rollout_number_overtake = 13;
  // Aborting
  double v_abort = 2.0;
  double accel_abort = 2.5;

  double following_distance = 8.0;
  double avoiding_distance = 1.0;

  void validate() const;
};

struct BehaviorParams {
  double velocity = 0.0;
  double acceleration = 0.0;
  double following_distance = 0.0;
  double avoiding_distance = 0.0;
  int rollout_number = 1;
  int rollout_id = 0;
  double d_min = 0.0;
  double d_max = 0.0;
  double w_transition = 1.0;

  void validate() const;
};

struct Rollout {
  int id = 0;
  double target_d = 0.0;
  std::vector<Eigen::Vector2d> waypoints;  // (s, d)
};

struct RolloutCost {
  int id = 0;
  double collision = 0.0;
  double transition = 0.0;
  double center = 0.0;
  double total = 0.0;
  bool overlap = false;  // some predicted (waypoint, NPC) pair overlaps
};

struct RolloutSelection {
  std::vector<RolloutCost> costs;
  int selected_id = 0;
};

/// Lateral profile of a roll-out: smoothstep from `d0` to `target` over
/// `transition_length`, constant afterwards.
double rollout_lateral(double d0, double target, double x, double transition_length);

std::vector<Rollout> generate_rollouts(const VehicleState& ego, const RoadModel& road,
                                       const BehaviorParams& params,
                                       const PlannerConfig& cfg);

/// Scores every roll-out against constant-velocity NPC predictions and selects
/// the cheapest (lowest id on ties).
RolloutSelection evaluate_rollouts(const std::vector<Rollout>& rollouts,
                                   const WorldState& world, const BehaviorParams& params,
                                   const PlannerConfig& cfg);

/// Cost of one roll-out; `evaluate_rollouts` is an argmin over this.
RolloutCost rollout_cost(const Rollout& rollout, const WorldState& world,
                         const BehaviorParams& params, const PlannerConfig& cfg);

BehaviorParams apply_action(Action action, const PlannerConfig& cfg, const RoadModel& road);

/// Steering towards the roll-out waypoint whose distance from the ego is
/// closest to `lookahead`. Returns 0 when no waypoint lies ahead.
double pure_pursuit(const VehicleState& ego, const Rollout& rollout, double lookahead,
                    const KinematicLimits& limits);

struct FrontVehicle {
  double gap = 0.0;  // bumper to bumper, negative when overlapping
  double speed = 0.0;
};

/// Nearest same-direction NPC ahead whose footprint overlaps the lateral band
/// swept between the ego's current offset and `target_d`.
std::optional<FrontVehicle> find_front_vehicle(const WorldState& world, double target_d);

double longitudinal_control(const VehicleState& ego, std::optional<FrontVehicle> front,
                            const BehaviorParams& params, const PlannerConfig& cfg);

}  // namespace overtake
