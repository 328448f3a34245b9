#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "overtake/baseline_policy.hpp"
#include "overtake/local_planner.hpp"
#include "overtake/rl_core.hpp"
#include "overtake/scenario.hpp"

namespace overtake {

/// Everything that defines the closed loop of one episode.
struct EpisodeConfig {
  WorldConfig world;
  PlannerConfig planner;
  ObservationConfig observation;
  RewardConfig reward;
  double decision_period = 0.5;
  double ego_initial_speed = 3.0;
  double vehicle_length = 4.0;  // footprint of every vehicle
  double vehicle_width = 1.8;
  double gamma = 0.95;  // for the reported discounted return

  int physics_steps_per_decision() const;
  void validate() const;
};

/// Initial world of a scenario: ego at s = 0 in its lane, NPC1 at d1 in the
/// ego lane, NPC2 at d1 + d2 and NPC3 at d1 + d2 + d3 in the opposite lane.
WorldState build_world(const ScenarioSpec& spec, const EpisodeConfig& cfg);

/// Result of planning and tracking for one physics step.
struct ControlCommand {
  double steering = 0.0;
  double accel = 0.0;
  int rollout_id = 0;
  double target_d = 0.0;
};

/// Plans from the current world and returns the steering and acceleration
/// for one physics step. When `tracked` holds a path with the same target
/// offset as the new selection and enough remaining length, steering keeps
/// following that path so a lane change started earlier is carried through;
/// otherwise `tracked` is replaced by the newly selected roll-out.
ControlCommand plan_and_control(const WorldState& world, const BehaviorParams& params,
                                const EpisodeConfig& cfg, std::optional<Rollout>& tracked);
ControlCommand plan_and_control(const WorldState& world, const BehaviorParams& params,
                                const EpisodeConfig& cfg);

/// Interface the trainer uses; decouples learning from the simulator.
class Environment {
 public:
  struct Step {
    Eigen::VectorXd observation;
    double reward = 0.0;
    bool done = false;
    std::optional<Outcome> outcome;  // set when done
  };

  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual Eigen::VectorXd reset(const ScenarioSpec& spec) = 0;
  virtual Step step(Action action) = 0;
};

/// The two-lane simulator driven at decision cadence: each step applies the
/// action's planner parameters for one decision period of physics steps.
class OvertakeEnv final : public Environment {
 public:
  explicit OvertakeEnv(EpisodeConfig cfg);

  int observation_size() const override { return cfg_.observation.dimension(); }
  Eigen::VectorXd reset(const ScenarioSpec& spec) override;
  Step step(Action action) override;

  const WorldState& world() const { return world_; }
  const EpisodeConfig& config() const { return cfg_; }
  Eigen::VectorXd observe() const;
  /// Command applied on the first physics step of the last decision.
  const ControlCommand& last_command() const { return last_command_; }

 private:
  EpisodeConfig cfg_;
  WorldState world_;
  ControlCommand last_command_;
  std::optional<Rollout> tracked_;
};

Outcome outcome_of(const WorldEvent& event);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action decide(const WorldState& world, const Eigen::VectorXd& observation) = 0;
};

/// Greedy action of a trained network.
class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(const QNet& net) : net_(net) {}
  Action decide(const WorldState&, const Eigen::VectorXd& obs) override {
    return select_greedy(net_, obs);
  }

 private:
  const QNet& net_;
};

class BaselinePolicy final : public Policy {
 public:
  explicit BaselinePolicy(BaselineConfig cfg) : cfg_(cfg) {}
  Action decide(const WorldState& world, const Eigen::VectorXd&) override;

 private:
  BaselineConfig cfg_;
  BaselineState state_;
};

/// Arbitrary decision function of the world, for scripted schedules.
class FunctionPolicy final : public Policy {
 public:
  explicit FunctionPolicy(std::function<Action(const WorldState&)> fn) : fn_(std::move(fn)) {}
  Action decide(const WorldState& world, const Eigen::VectorXd&) override { return fn_(world); }

 private:
  std::function<Action(const WorldState&)> fn_;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

struct TraceRow {
  double t = 0.0;
  double s = 0.0;
  double d = 0.0;
  double steering = 0.0;
  double speed = 0.0;
  int action = 0;
  int rollout_id = 0;
  double heading = 0.0;  // kept in memory only, not exported

  bool operator==(const TraceRow&) const = default;
};

struct EpisodeResult {
  int scenario_id = 0;
  Outcome outcome = Outcome::Timeout;
  int crash_npc_id = -1;
  std::optional<double> completion_time;
  double end_time = 0.0;
  double discounted_return = 0.0;
  std::vector<TraceRow> trace;
  std::vector<Transition> transitions;  // only when requested
  double v1 = 0.0;
  double v2 = 0.0;
  int npc_count = 0;
};

/// Runs a scenario to its terminal event. The trace holds one row per
/// decision plus a final row at the terminal time.
EpisodeResult run_episode(const ScenarioSpec& spec, Policy& policy, const EpisodeConfig& cfg,
                          bool record_transitions = false);

/// Runs every scenario with a fresh policy per episode, `jobs` at a time.
/// Results are returned in input order regardless of `jobs`.
std::vector<EpisodeResult> run_batch(const std::vector<ScenarioSpec>& specs,
                                     const PolicyFactory& make_policy, const EpisodeConfig& cfg,
                                     int jobs = 1);

}  // namespace overtake
