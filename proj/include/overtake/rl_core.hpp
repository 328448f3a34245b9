#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "overtake/action.hpp"
#include "overtake/q_network.hpp"
#include "overtake/road_world.hpp"

namespace overtake {

struct ObservationConfig {
  int slots = 3;
  double far_distance = 200.0;  // rel_s of an empty slot
  double speed_scale = 5.0;
  double distance_scale = 100.0;
  double lateral_scale = 5.0;
  double yaw_rate_scale = 1.0;

  int dimension() const { return 3 + 5 * slots; }
  void validate() const;
};

struct NpcSlot {
  double rel_s = 0.0;
  double rel_d = 0.0;
  double rel_v_long = 0.0;
  double rel_v_lat = 0.0;
  bool present = false;
  int npc_id = -1;
};

/// Ego features plus one slot per tracked NPC, all in physical units.
struct Observation {
  double ego_speed = 0.0;
  double ego_yaw_rate = 0.0;
  double ego_lateral = 0.0;
  std::vector<NpcSlot> slots;

  /// Normalised network input of length cfg.dimension().
  Eigen::VectorXd features(const ObservationConfig& cfg) const;
};

/// Slot 0: nearest same-direction vehicle ahead in the ego lane. Slot 1:
/// nearest oncoming vehicle not yet passed. Remaining slots: all other NPCs
/// by distance. Relative quantities are expressed in the ego frame.
Observation encode_observation(const WorldState& world, const RoadModel& road,
                               const ObservationConfig& cfg);

struct RewardConfig {
  double w_progress = 0.1;
  double goal_bonus = 10.0;
  double crash_penalty = 100.0;
  double switch_penalty = 0.5;

  void validate() const;
};

double distance_to_goal(const WorldState& world, const RoadModel& road);

double reward(const WorldState& prev, Action action, const WorldState& next,
              const RoadModel& road, const RewardConfig& cfg);

struct Transition {
  Eigen::VectorXd s;
  Action a = Action::Following;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

/// Fixed-capacity ring buffer; sampling is uniform with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;

  template <typename Rng>
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&data_[pick(rng)]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

struct TrainConfig {
  double gamma = 0.95;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int target_sync_period = 200;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.6;
  std::int64_t iterations = 8000;
  std::int64_t learning_starts = 500;
  std::size_t buffer_capacity = 50000;
  double grad_clip = 0.0;  // global L2 norm, 0 disables
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 1;

  double epsilon_at(std::int64_t iteration) const;
  void validate() const;
};

/// Index of the largest value, lowest index on ties.
int argmax_action(const Eigen::VectorXd& q);

Action select_greedy(const QNet& net, const Eigen::VectorXd& obs);

/// Epsilon-greedy selection. Draws one uniform number, plus one action index
/// when exploring.
template <typename Rng>
Action select_action(const QNet& net, const Eigen::VectorXd& obs, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    return static_cast<Action>(pick(rng));
  }
  return select_greedy(net, obs);
}

/// y_i = r_i for terminal transitions, else r_i + gamma * max_a Q_target(s'_i, a).
Eigen::VectorXd td_targets(const std::vector<const Transition*>& batch, const QNet& target_net,
                           double gamma);

/// One stochastic gradient step on the squared TD error. Returns the loss
/// before the update, or nullopt (and leaves everything untouched) when the
/// buffer holds fewer than batch_size transitions.
template <typename Rng>
std::optional<double> train_step(QNet& net, QNet& target_net, const ReplayBuffer& buffer,
                                 const TrainConfig& cfg, std::int64_t step_index, Rng& rng);

std::optional<double> train_on_batch(QNet& net, QNet& target_net,
                                     const std::vector<const Transition*>& batch,
                                     const TrainConfig& cfg, std::int64_t step_index);

template <typename Rng>
std::optional<double> train_step(QNet& net, QNet& target_net, const ReplayBuffer& buffer,
                                 const TrainConfig& cfg, std::int64_t step_index, Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size)) return std::nullopt;
  const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng);
  return train_on_batch(net, target_net, batch, cfg, step_index);
}

/// sum_t gamma^t r_t.
double discounted_return(const std::vector<double>& rewards, double gamma);

}  // namespace overtake
