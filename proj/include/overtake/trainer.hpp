#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "overtake/episode.hpp"

namespace overtake {

struct CurvePoint {
  int episode = 0;
  int scenario_id = 0;
  std::int64_t end_iteration = 0;
  int steps = 0;
  double episode_return = 0.0;  // undiscounted sum of rewards
  double discounted_return = 0.0;
  Outcome outcome = Outcome::Timeout;
  double epsilon = 0.0;
  double mean_loss = 0.0;  // over the gradient steps taken during the episode
};

struct TrainResult {
  QNet net;
  std::vector<CurvePoint> curve;
  std::int64_t gradient_steps = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

/// Network layout for an observation of `input_size` features.
std::vector<int> network_dims(int input_size, const TrainConfig& cfg);

/// The network `train` starts from; depends only on (input_size, cfg).
QNet initial_network(int input_size, const TrainConfig& cfg);

/// Episodic DQN: epsilon-greedy interaction at decision cadence, one gradient
/// step per decision once `learning_starts` transitions were collected, target
/// sync every `target_sync_period` gradient steps. Deterministic given cfg.seed.
/// Throws std::runtime_error if the loss becomes non-finite.
TrainResult train(const EnvFactory& make_env, const std::vector<ScenarioSpec>& scenarios,
                  const TrainConfig& cfg,
                  const std::function<void(const CurvePoint&)>& on_episode = {});

}  // namespace overtake
