#include "overtake/local_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace overtake {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

double bounding_radius(const VehicleState& v) {
  return 0.5 * std::hypot(v.length, v.width);
}

}  // namespace

void PlannerConfig::validate() const {
  require(positive(horizon), "planner.horizon must be > 0");
  require(positive(transition_length), "planner.transition_length must be > 0");
  require(positive(waypoint_spacing) && waypoint_spacing <= horizon,
          "planner.waypoint_spacing must be in (0, horizon]");
  require(positive(w_collision) && positive(w_transition) && positive(w_center),
          "planner cost weights must be > 0");
  require(positive(clearance_scale), "planner.clearance_scale must be > 0");
  require(positive(overlap_cost), "planner.overlap_cost must be > 0");
  require(positive(min_prediction_speed), "planner.min_prediction_speed must be > 0");
  require(positive(lookahead), "planner.lookahead must be > 0");
  require(positive(k_v) && positive(k_g) && positive(k_speed), "planner gains must be > 0");
  require(positive(v_follow) && positive(v_overtake) && positive(v_abort),
          "planner velocities must be > 0");
  require(v_overtake >= v_follow, "planner.v_overtake must be >= planner.v_follow");
  require(v_abort <= v_follow, "planner.v_abort must be <= planner.v_follow");
  require(positive(accel_follow) && positive(accel_overtake) && positive(accel_abort),
          "planner accelerations must be > 0");
  require(rollout_number >= 1 && rollout_number % 2 == 1,
          "planner.rollout_number must be odd and >= 1");
  require(rollout_number_overtake >= 1 && rollout_number_overtake % 2 == 1,
          "planner.rollout_number_overtake must be odd and >= 1");
  require(positive(following_distance), "planner.following_distance must be > 0");
  require(positive(avoiding_distance), "planner.avoiding_distance must be > 0");
}

void BehaviorParams::validate() const {
  require(std::isfinite(velocity) && velocity >= 0.0, "params.velocity must be >= 0");
  require(positive(acceleration), "params.acceleration must be > 0");
  require(positive(following_distance), "params.following_distance must be > 0");
  require(positive(avoiding_distance), "params.avoiding_distance must be > 0");
  require(rollout_number >= 1 && rollout_number % 2 == 1,
          "params.rollout_number must be odd and >= 1");
  require(rollout_id >= 0 && rollout_id < rollout_number, "params.rollout_id out of range");
  require(std::isfinite(d_min) && std::isfinite(d_max) && d_min <= d_max,
          "params lateral range must satisfy d_min <= d_max");
  require(positive(w_transition), "params.w_transition must be > 0");
}

double rollout_lateral(double d0, double target, double x, double transition_length) {
  if (x <= 0.0) return d0;
  if (x >= transition_length) return target;
  const double u = x / transition_length;
  return d0 + (target - d0) * u * u * (3.0 - 2.0 * u);
}

std::vector<Rollout> generate_rollouts(const VehicleState& ego, const RoadModel&,
                                       const BehaviorParams& params,
                                       const PlannerConfig& cfg) {
  params.validate();
  const int n = params.rollout_number;
  const auto samples = static_cast<int>(std::floor(cfg.horizon / cfg.waypoint_spacing + 1e-9));

  std::vector<Rollout> rollouts;
  rollouts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rollout r;
    r.id = i;
    r.target_d = n == 1 ? 0.5 * (params.d_min + params.d_max)
                        : params.d_min + (params.d_max - params.d_min) * i / (n - 1);
    r.waypoints.reserve(static_cast<std::size_t>(samples + 1));
    for (int k = 0; k <= samples; ++k) {
      const double x = k * cfg.waypoint_spacing;
      r.waypoints.emplace_back(ego.s + x,
                               rollout_lateral(ego.d, r.target_d, x, cfg.transition_length));
    }
    rollouts.push_back(std::move(r));
  }
  return rollouts;
}

RolloutCost rollout_cost(const Rollout& rollout, const WorldState& world,
                         const BehaviorParams& params, const PlannerConfig& cfg) {
  const VehicleState& ego = world.ego;
  // Roll-outs are timed at the planned velocity, not the current speed.
  const double v_pred = std::max(params.velocity, cfg.min_prediction_speed);
  const double r_ego = bounding_radius(ego);

  RolloutCost cost;
  cost.id = rollout.id;
  const auto& wps = rollout.waypoints;
  for (std::size_t k = 0; k < wps.size(); ++k) {
    const double t = (wps[k].x() - wps.front().x()) / v_pred;
    VehicleState pose = ego;
    pose.s = wps[k].x();
    pose.d = wps[k].y();
    if (wps.size() > 1) {
      const auto& a = wps[k == 0 ? 0 : k - 1];
      const auto& b = wps[k == 0 ? 1 : k];
      pose.heading = std::atan2(b.y() - a.y(), b.x() - a.x());
    }
    for (const auto& npc : world.npcs) {
      VehicleState predicted = npc.state;
      predicted.s += (npc.lane == Lane::Ego ? 1.0 : -1.0) * npc.target_speed * t;
      const double centre_gap = (predicted.position() - pose.position()).norm();
      if (centre_gap > r_ego + bounding_radius(predicted) + params.avoiding_distance) continue;
      const double clearance = signed_clearance(pose, predicted);
      if (clearance <= 0.0) {
        cost.collision += cfg.overlap_cost;
        cost.overlap = true;
      } else if (clearance < params.avoiding_distance) {
        cost.collision += std::exp(-clearance / cfg.clearance_scale);
      }
    }
  }
  cost.transition = std::abs(rollout.target_d - ego.d);
  cost.center = std::abs(rollout.target_d - 0.0);
  cost.total = cfg.w_collision * cost.collision + params.w_transition * cost.transition +
               cfg.w_center * cost.center;
  return cost;
}

RolloutSelection evaluate_rollouts(const std::vector<Rollout>& rollouts,
                                   const WorldState& world, const BehaviorParams& params,
                                   const PlannerConfig& cfg) {
  if (rollouts.empty()) throw std::invalid_argument("evaluate_rollouts: no roll-outs");
  RolloutSelection out;
  out.costs.reserve(rollouts.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : rollouts) {
    out.costs.push_back(rollout_cost(r, world, params, cfg));
    if (out.costs.back().total < best) {
      best = out.costs.back().total;
      out.selected_id = r.id;
    }
  }
  return out;
}

BehaviorParams apply_action(Action action, const PlannerConfig& cfg, const RoadModel& road) {
  const double half = 0.5 * road.lane_width;
  BehaviorParams p;
  p.following_distance = cfg.following_distance;
  p.avoiding_distance = cfg.avoiding_distance;
  p.w_transition = cfg.w_transition;
  p.d_min = road.ego_lane_center_d() - half;
  p.d_max = road.ego_lane_center_d() + half;
  switch (action) {
    case Action::Following:
      p.velocity = cfg.v_follow;
      p.acceleration = cfg.accel_follow;
      p.rollout_number = cfg.rollout_number;
      break;
    case Action::Overtaking:
      p.velocity = cfg.v_overtake;
      p.acceleration = cfg.accel_overtake;
      p.rollout_number = cfg.rollout_number_overtake;
      p.d_max = road.opposite_lane_center_d() + half;
      break;
    case Action::Aborting:
      p.velocity = cfg.v_abort;
      p.acceleration = cfg.accel_abort;
      p.rollout_number = cfg.rollout_number;
      p.w_transition = 0.5 * cfg.w_transition;
      break;
  }
  p.rollout_id = (p.rollout_number - 1) / 2;
  return p;
}

double pure_pursuit(const VehicleState& ego, const Rollout& rollout, double lookahead,
                    const KinematicLimits& limits) {
  if (!(lookahead > 0.0)) throw std::invalid_argument("pure_pursuit: lookahead must be > 0");
  if (rollout.waypoints.empty()) throw std::invalid_argument("pure_pursuit: empty roll-out");

  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  double best_err = std::numeric_limits<double>::infinity();
  double alpha = 0.0;
  bool found = false;
  for (const auto& wp : rollout.waypoints) {
    const Eigen::Vector2d rel = wp - ego.position();
    const double x = c * rel.x() + s * rel.y();
    const double y = -s * rel.x() + c * rel.y();
    if (x <= 0.0) continue;
    const double err = std::abs(std::hypot(x, y) - lookahead);
    if (err < best_err) {
      best_err = err;
      alpha = std::atan2(y, x);
      found = true;
    }
  }
  if (!found) return 0.0;
  const double steering = std::atan(2.0 * limits.wheelbase * std::sin(alpha) / lookahead);
  return std::clamp(steering, -limits.steering_max, limits.steering_max);
}

std::optional<FrontVehicle> find_front_vehicle(const WorldState& world, double target_d) {
  const VehicleState& ego = world.ego;
  const double band_lo = std::min(ego.d, target_d) - 0.5 * ego.width;
  const double band_hi = std::max(ego.d, target_d) + 0.5 * ego.width;
  std::optional<FrontVehicle> front;
  for (const auto& npc : world.npcs) {
    if (npc.lane != Lane::Ego) continue;
    const VehicleState& v = npc.state;
    if (v.s <= ego.s) continue;
    if (v.d + 0.5 * v.width <= band_lo || v.d - 0.5 * v.width >= band_hi) continue;
    const double gap = v.s - ego.s - 0.5 * (v.length + ego.length);
    if (!front || gap < front->gap) front = FrontVehicle{gap, v.speed};
  }
  return front;
}

double longitudinal_control(const VehicleState& ego, std::optional<FrontVehicle> front,
                            const BehaviorParams& params, const PlannerConfig& cfg) {
  const double a = params.acceleration;
  double accel = std::clamp(cfg.k_speed * (params.velocity - ego.speed), -a, a);
  if (front) {
    if (front->gap < 0.0) return -a;
    const double follow = cfg.k_v * (front->speed - ego.speed) +
                          cfg.k_g * (front->gap - params.following_distance);
    accel = std::min(accel, std::clamp(follow, -a, a));
  }
  return accel;
}

}  // namespace overtake
