#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace overtake {

enum class Lane : std::uint8_t { Ego = 0, Opposite = 1 };

/// Straight two-lane road in (s, d) coordinates. The ego lane centerline is
/// d = 0 and the opposite lane centerline is d = +lane_width.
struct RoadModel {
  double length = 200.0;
  double lane_width = 3.0;
  double goal_s = 100.0;

  double ego_lane_center_d() const { return 0.0; }
  double opposite_lane_center_d() const { return lane_width; }
  double lane_center(Lane lane) const {
    return lane == Lane::Ego ? ego_lane_center_d() : opposite_lane_center_d();
  }
  /// Lane whose centerline is closest to `d`.
  Lane lane_of(double d) const {
    return d < 0.5 * lane_width ? Lane::Ego : Lane::Opposite;
  }

  void validate() const;
};

struct KinematicLimits {
  double wheelbase = 2.8;
  double steering_max = 0.5;
  double v_max = 4.2;

  void validate() const;
};

struct VehicleState {
  double s = 0.0;
  double d = 0.0;
  double heading = 0.0;  // relative to the road axis
  double speed = 0.0;
  double yaw_rate = 0.0;
  double length = 4.0;
  double width = 1.8;

  Eigen::Vector2d position() const { return {s, d}; }
};

struct Npc {
  int id = 0;
  VehicleState state;
  Lane lane = Lane::Ego;
  double target_speed = 0.0;
};

struct WorldEvent {
  enum class Kind : std::uint8_t { Collision, GoalReached, OffRoad, Timeout };

  Kind kind = Kind::Timeout;
  int npc_id = -1;  // set for collisions only
  double time = 0.0;

  bool operator==(const WorldEvent&) const = default;
};

struct WorldConfig {
  RoadModel road;
  KinematicLimits limits;
  double dt = 0.05;
  double t_max = 60.0;

  void validate() const;
};

struct WorldState {
  double time = 0.0;
  std::int64_t step = 0;
  VehicleState ego;
  std::vector<Npc> npcs;
  std::vector<WorldEvent> events;
  // Lane targeted by the roll-out selected at the last decision. Maintained by
  // the episode loop; the physics never reads it.
  Lane ego_target_lane = Lane::Ego;

  bool terminated() const { return !events.empty(); }
  std::optional<WorldEvent> terminal_event() const;
  const Npc* find_npc(int id) const;
};

/// Kinematic bicycle step. Throws std::invalid_argument on non-finite input
/// or steering beyond the limit.
VehicleState step_ego(const VehicleState& state, double steering, double accel,
                      double dt, const KinematicLimits& limits);

/// Constant-speed lane follower. Opposite-lane NPCs travel towards -s.
VehicleState step_npc(const VehicleState& npc, Lane lane, double target_speed,
                      double dt, const RoadModel& road);

/// Corners of the footprint rectangle, counter-clockwise.
std::array<Eigen::Vector2d, 4> footprint_corners(const VehicleState& v);

/// Separating-axis overlap test of the two oriented footprints.
bool check_collision(const VehicleState& a, const VehicleState& b);

/// Separation distance between the two footprints when disjoint, minus the
/// minimum penetration depth along the separating axes when overlapping.
double signed_clearance(const VehicleState& a, const VehicleState& b);

/// Advances ego and NPCs by one physics step and appends at most one terminal
/// event. Throws std::logic_error when the world already terminated.
WorldState step_world(const WorldState& world, double steering, double accel,
                      const WorldConfig& cfg);

}  // namespace overtake
