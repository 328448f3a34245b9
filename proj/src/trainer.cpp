#include "overtake/trainer.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace overtake {

namespace {
constexpr std::uint64_t kInteractionStream = 0x5bd1e9955bd1e995ULL;
}

std::vector<int> network_dims(int input_size, const TrainConfig& cfg) {
  std::vector<int> dims{input_size};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(kNumActions);
  return dims;
}

QNet initial_network(int input_size, const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return QNet::glorot(network_dims(input_size, cfg), rng);
}

TrainResult train(const EnvFactory& make_env, const std::vector<ScenarioSpec>& scenarios,
                  const TrainConfig& cfg,
                  const std::function<void(const CurvePoint&)>& on_episode) {
  cfg.validate();
  if (scenarios.empty()) throw std::invalid_argument("train: no scenarios");

  auto env = make_env();
  TrainResult result{initial_network(env->observation_size(), cfg), {}, 0};
  if (cfg.iterations == 0) return result;

  QNet& net = result.net;
  QNet target = net;
  ReplayBuffer buffer(cfg.buffer_capacity);
  std::mt19937_64 rng(cfg.seed ^ kInteractionStream);
  std::uniform_int_distribution<std::size_t> pick(0, scenarios.size() - 1);

  std::int64_t iteration = 0;
  int episode = 0;
  while (iteration < cfg.iterations) {
    const ScenarioSpec& spec = scenarios[pick(rng)];
    Eigen::VectorXd obs = env->reset(spec);
    CurvePoint point;
    point.episode = episode;
    point.scenario_id = spec.id;
    point.epsilon = cfg.epsilon_at(iteration);
    double discount = 1.0, loss_sum = 0.0;
    int loss_count = 0;

    bool finished = false;
    while (iteration < cfg.iterations) {
      const Action a = select_action(net, obs, cfg.epsilon_at(iteration), rng);
      Environment::Step step = env->step(a);
      ++iteration;
      ++point.steps;
      point.episode_return += step.reward;
      point.discounted_return += discount * step.reward;
      discount *= cfg.gamma;
      buffer.push({obs, a, step.reward, step.observation, step.done});

      if (iteration >= cfg.learning_starts) {
        if (const auto loss =
                train_step(net, target, buffer, cfg, result.gradient_steps + 1, rng)) {
          ++result.gradient_steps;
          if (!std::isfinite(*loss))
            throw std::runtime_error("train: non-finite loss at gradient step " +
                                     std::to_string(result.gradient_steps));
          loss_sum += *loss;
          ++loss_count;
        }
      }
      if (step.done) {
        point.outcome = *step.outcome;
        finished = true;
        break;
      }
      obs = std::move(step.observation);
    }
    if (!finished) break;  // iteration budget ran out mid-episode
    point.end_iteration = iteration;
    point.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
    result.curve.push_back(point);
    if (on_episode) on_episode(point);
    ++episode;
  }
  return result;
}

}  // namespace overtake
