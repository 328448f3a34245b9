#include "overtake/episode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace overtake {

int EpisodeConfig::physics_steps_per_decision() const {
  return std::max(1, static_cast<int>(std::lround(decision_period / world.dt)));
}

void EpisodeConfig::validate() const {
  world.validate();
  planner.validate();
  observation.validate();
  reward.validate();
  if (!(std::isfinite(decision_period) && decision_period >= world.dt))
    throw std::invalid_argument("episode.decision_period must be >= world.dt");
  if (!(std::isfinite(ego_initial_speed) && ego_initial_speed >= 0.0 &&
        ego_initial_speed <= world.limits.v_max))
    throw std::invalid_argument("episode.ego_initial_speed must be in [0, vehicle.v_max]");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("episode.gamma must be in [0, 1)");
  if (!(std::isfinite(vehicle_length) && vehicle_length > 0.0 && std::isfinite(vehicle_width) &&
        vehicle_width > 0.0 && vehicle_width < world.road.lane_width))
    throw std::invalid_argument("vehicle footprint must be > 0 and narrower than a lane");
}

WorldState build_world(const ScenarioSpec& spec, const EpisodeConfig& cfg) {
  spec.validate();
  const RoadModel& road = cfg.world.road;
  WorldState w;
  w.ego.speed = cfg.ego_initial_speed;
  w.ego.length = cfg.vehicle_length;
  w.ego.width = cfg.vehicle_width;
  auto add = [&](int id, double s, Lane lane, double speed) {
    Npc npc;
    npc.id = id;
    npc.lane = lane;
    npc.target_speed = speed;
    npc.state.s = s;
    npc.state.d = road.lane_center(lane);
    npc.state.heading = lane == Lane::Ego ? 0.0 : std::numbers::pi;
    npc.state.speed = speed;
    npc.state.length = cfg.vehicle_length;
    npc.state.width = cfg.vehicle_width;
    w.npcs.push_back(npc);
  };
  if (spec.npc_count >= 1) add(1, spec.d1, Lane::Ego, spec.v1);
  if (spec.npc_count >= 2) add(2, spec.d1 + spec.d2, Lane::Opposite, spec.v2);
  if (spec.npc_count >= 3) add(3, spec.d1 + spec.d2 + spec.d3, Lane::Opposite, spec.v3);
  return w;
}

ControlCommand plan_and_control(const WorldState& world, const BehaviorParams& params,
                                const EpisodeConfig& cfg, std::optional<Rollout>& tracked) {
  auto rollouts = generate_rollouts(world.ego, cfg.world.road, params, cfg.planner);
  const auto selection = evaluate_rollouts(rollouts, world, params, cfg.planner);
  Rollout& chosen = rollouts[static_cast<std::size_t>(selection.selected_id)];
  const bool keep = tracked && std::abs(tracked->target_d - chosen.target_d) < 1e-9 &&
                    !tracked->waypoints.empty() &&
                    tracked->waypoints.back().x() - world.ego.s > 2.0 * cfg.planner.lookahead;
  if (!keep) tracked = std::move(chosen);
  ControlCommand cmd;
  cmd.rollout_id = selection.selected_id;
  cmd.target_d = tracked->target_d;
  cmd.steering = pure_pursuit(world.ego, *tracked, cfg.planner.lookahead, cfg.world.limits);
  cmd.accel = longitudinal_control(world.ego, find_front_vehicle(world, cmd.target_d), params,
                                   cfg.planner);
  return cmd;
}

ControlCommand plan_and_control(const WorldState& world, const BehaviorParams& params,
                                const EpisodeConfig& cfg) {
  std::optional<Rollout> tracked;
  return plan_and_control(world, params, cfg, tracked);
}

OvertakeEnv::OvertakeEnv(EpisodeConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Eigen::VectorXd OvertakeEnv::reset(const ScenarioSpec& spec) {
  world_ = build_world(spec, cfg_);
  last_command_ = {};
  tracked_.reset();
  return observe();
}

Eigen::VectorXd OvertakeEnv::observe() const {
  return encode_observation(world_, cfg_.world.road, cfg_.observation).features(cfg_.observation);
}

Environment::Step OvertakeEnv::step(Action action) {
  const RoadModel& road = cfg_.world.road;
  const BehaviorParams params = apply_action(action, cfg_.planner, road);
  const WorldState prev = world_;
  const int substeps = cfg_.physics_steps_per_decision();
  for (int i = 0; i < substeps && !world_.terminated(); ++i) {
    const ControlCommand cmd = plan_and_control(world_, params, cfg_, tracked_);
    if (i == 0) {
      last_command_ = cmd;
      world_.ego_target_lane = road.lane_of(cmd.target_d);
    }
    world_ = step_world(world_, cmd.steering, cmd.accel, cfg_.world);
  }
  Step out;
  out.reward = reward(prev, action, world_, road, cfg_.reward);
  out.observation = observe();
  out.done = world_.terminated();
  if (out.done) out.outcome = outcome_of(*world_.terminal_event());
  return out;
}

Outcome outcome_of(const WorldEvent& event) {
  switch (event.kind) {
    case WorldEvent::Kind::GoalReached: return Outcome::Success;
    case WorldEvent::Kind::Collision: return Outcome::Crash;
    case WorldEvent::Kind::OffRoad: return Outcome::OffRoad;
    case WorldEvent::Kind::Timeout: return Outcome::Timeout;
  }
  return Outcome::Timeout;
}

Action BaselinePolicy::decide(const WorldState& world, const Eigen::VectorXd&) {
  auto [action, next] = rule_based_decide(world, state_, cfg_);
  state_ = next;
  return action;
}

EpisodeResult run_episode(const ScenarioSpec& spec, Policy& policy, const EpisodeConfig& cfg,
                          bool record_transitions) {
  OvertakeEnv env(cfg);
  Eigen::VectorXd obs = env.reset(spec);

  EpisodeResult result;
  result.scenario_id = spec.id;
  result.v1 = spec.v1;
  result.v2 = spec.v2;
  result.npc_count = spec.npc_count;

  double discount = 1.0;
  TraceRow row;
  while (!env.world().terminated()) {
    const Action action = policy.decide(env.world(), obs);
    const VehicleState ego = env.world().ego;
    const double t = env.world().time;
    Environment::Step step = env.step(action);

    row = TraceRow{t,          ego.s, ego.d, env.last_command().steering, ego.speed,
                   action_code(action), env.last_command().rollout_id, ego.heading};
    result.trace.push_back(row);

    result.discounted_return += discount * step.reward;
    discount *= cfg.gamma;
    if (record_transitions)
      result.transitions.push_back({obs, action, step.reward, step.observation, step.done});
    obs = std::move(step.observation);
  }

  const WorldState& end = env.world();
  const WorldEvent ev = *end.terminal_event();
  row.t = end.time;
  row.s = end.ego.s;
  row.d = end.ego.d;
  row.speed = end.ego.speed;
  row.heading = end.ego.heading;
  result.trace.push_back(row);

  result.outcome = outcome_of(ev);
  result.end_time = end.time;
  if (ev.kind == WorldEvent::Kind::Collision) result.crash_npc_id = ev.npc_id;
  if (result.outcome == Outcome::Success) result.completion_time = end.time;
  return result;
}

std::vector<EpisodeResult> run_batch(const std::vector<ScenarioSpec>& specs,
                                     const PolicyFactory& make_policy, const EpisodeConfig& cfg,
                                     int jobs) {
  std::vector<EpisodeResult> results(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        auto policy = make_policy();
        results[i] = run_episode(specs[i], *policy, cfg);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  const auto n_threads =
      static_cast<std::size_t>(std::clamp<int>(jobs, 1, std::max<int>(1, static_cast<int>(specs.size()))));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace overtake
