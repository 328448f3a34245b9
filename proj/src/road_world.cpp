#include "overtake/road_world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace overtake {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(const VehicleState& v) {
  return std::isfinite(v.s) && std::isfinite(v.d) && std::isfinite(v.heading) &&
         std::isfinite(v.speed) && std::isfinite(v.yaw_rate) &&
         std::isfinite(v.length) && std::isfinite(v.width);
}

// Heading is kept strictly inside (-pi/2, pi/2) so the ego never turns around.
constexpr double kHeadingLimit = 0.5 * std::numbers::pi - 1e-6;

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

// Footprint axes: the heading direction and its normal.
std::array<Eigen::Vector2d, 2> axes(const VehicleState& v) {
  const double c = std::cos(v.heading), s = std::sin(v.heading);
  return {Eigen::Vector2d(c, s), Eigen::Vector2d(-s, c)};
}

// Overlap of the two projections on `axis`; negative when separated.
double projected_overlap(const std::array<Eigen::Vector2d, 4>& a,
                         const std::array<Eigen::Vector2d, 4>& b,
                         const Eigen::Vector2d& axis) {
  double a_min = std::numeric_limits<double>::infinity(), a_max = -a_min;
  double b_min = a_min, b_max = a_max;
  for (const auto& p : a) {
    const double x = p.dot(axis);
    a_min = std::min(a_min, x);
    a_max = std::max(a_max, x);
  }
  for (const auto& p : b) {
    const double x = p.dot(axis);
    b_min = std::min(b_min, x);
    b_max = std::max(b_max, x);
  }
  return std::min(a_max, b_max) - std::max(a_min, b_min);
}

}  // namespace

void RoadModel::validate() const {
  require(std::isfinite(length) && std::isfinite(lane_width) && std::isfinite(goal_s),
          "road: non-finite value");
  require(lane_width > 0.0, "road.lane_width must be > 0");
  require(goal_s > 0.0 && goal_s <= length, "road.goal_s must lie in (0, road.length]");
}

void KinematicLimits::validate() const {
  require(std::isfinite(wheelbase) && wheelbase > 0.0, "vehicle.wheelbase must be > 0");
  require(std::isfinite(steering_max) && steering_max > 0.0 &&
              steering_max < 0.5 * std::numbers::pi,
          "vehicle.steering_max must be in (0, pi/2)");
  require(std::isfinite(v_max) && v_max > 0.0, "vehicle.v_max must be > 0");
}

void WorldConfig::validate() const {
  road.validate();
  limits.validate();
  require(std::isfinite(dt) && dt > 0.0, "world.dt must be > 0");
  require(std::isfinite(t_max) && t_max > 0.0, "world.t_max must be > 0");
}

std::optional<WorldEvent> WorldState::terminal_event() const {
  if (events.empty()) return std::nullopt;
  return events.back();
}

const Npc* WorldState::find_npc(int id) const {
  for (const auto& npc : npcs)
    if (npc.id == id) return &npc;
  return nullptr;
}

VehicleState step_ego(const VehicleState& state, double steering, double accel,
                      double dt, const KinematicLimits& limits) {
  require(finite(state) && std::isfinite(steering) && std::isfinite(accel) &&
              std::isfinite(dt),
          "step_ego: non-finite input");
  require(dt > 0.0, "step_ego: dt must be > 0");
  require(std::abs(steering) <= limits.steering_max + 1e-12,
          "step_ego: steering exceeds steering_max");

  VehicleState next = state;
  next.speed = std::clamp(state.speed + accel * dt, 0.0, limits.v_max);
  // Average speed and midpoint heading keep the update second order in dt.
  const double v = 0.5 * (state.speed + next.speed);
  next.heading = std::clamp(state.heading + v / limits.wheelbase * std::tan(steering) * dt,
                            -kHeadingLimit, kHeadingLimit);
  const double mid = 0.5 * (state.heading + next.heading);
  next.s = state.s + v * dt * std::cos(mid);
  next.d = state.d + v * dt * std::sin(mid);
  next.yaw_rate = (next.heading - state.heading) / dt;
  return next;
}

VehicleState step_npc(const VehicleState& npc, Lane lane, double target_speed,
                      double dt, const RoadModel& road) {
  VehicleState next = npc;
  const double direction = lane == Lane::Ego ? 1.0 : -1.0;
  next.speed = target_speed;
  next.heading = lane == Lane::Ego ? 0.0 : std::numbers::pi;
  next.yaw_rate = 0.0;
  next.d = road.lane_center(lane);
  next.s = npc.s + direction * target_speed * dt;
  return next;
}

std::array<Eigen::Vector2d, 4> footprint_corners(const VehicleState& v) {
  const auto [fwd, left] = axes(v);
  const Eigen::Vector2d c = v.position();
  const Eigen::Vector2d hl = 0.5 * v.length * fwd;
  const Eigen::Vector2d hw = 0.5 * v.width * left;
  return {c + hl - hw, c + hl + hw, c - hl + hw, c - hl - hw};
}

bool check_collision(const VehicleState& a, const VehicleState& b) {
  const auto ca = footprint_corners(a);
  const auto cb = footprint_corners(b);
  for (const auto& axis : axes(a))
    if (projected_overlap(ca, cb, axis) < 0.0) return false;
  for (const auto& axis : axes(b))
    if (projected_overlap(ca, cb, axis) < 0.0) return false;
  return true;
}

double signed_clearance(const VehicleState& a, const VehicleState& b) {
  const auto ca = footprint_corners(a);
  const auto cb = footprint_corners(b);
  if (check_collision(a, b)) {
    double depth = std::numeric_limits<double>::infinity();
    for (const auto& axis : axes(a)) depth = std::min(depth, projected_overlap(ca, cb, axis));
    for (const auto& axis : axes(b)) depth = std::min(depth, projected_overlap(ca, cb, axis));
    return -depth;
  }
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    for (const auto& p : cb) dist = std::min(dist, point_segment_distance(p, ca[i], ca[j]));
    for (const auto& p : ca) dist = std::min(dist, point_segment_distance(p, cb[i], cb[j]));
  }
  return dist;
}

WorldState step_world(const WorldState& world, double steering, double accel,
                      const WorldConfig& cfg) {
  if (world.terminated())
    throw std::logic_error("step_world: world already reached a terminal event");

  WorldState next = world;
  next.ego = step_ego(world.ego, steering, accel, cfg.dt, cfg.limits);
  for (auto& npc : next.npcs)
    npc.state = step_npc(npc.state, npc.lane, npc.target_speed, cfg.dt, cfg.road);
  next.step = world.step + 1;
  next.time = static_cast<double>(next.step) * cfg.dt;

  const auto& road = cfg.road;
  for (const auto& npc : next.npcs) {
    if (check_collision(next.ego, npc.state)) {
      next.events.push_back({WorldEvent::Kind::Collision, npc.id, next.time});
      return next;
    }
  }
  if (next.ego.d < -road.lane_width || next.ego.d > 2.0 * road.lane_width) {
    next.events.push_back({WorldEvent::Kind::OffRoad, -1, next.time});
  } else if (next.ego.s >= road.goal_s && std::abs(next.ego.d) <= 0.25 * road.lane_width) {
    next.events.push_back({WorldEvent::Kind::GoalReached, -1, next.time});
  } else if (next.time >= cfg.t_max - 1e-9) {
    next.events.push_back({WorldEvent::Kind::Timeout, -1, next.time});
  }
  return next;
}

}  // namespace overtake
