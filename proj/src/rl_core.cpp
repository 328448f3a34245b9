#include "overtake/rl_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace overtake {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

NpcSlot make_slot(const VehicleState& ego, const Npc& npc) {
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  const Eigen::Vector2d dp = npc.state.position() - ego.position();
  const Eigen::Vector2d dv =
      npc.state.speed * Eigen::Vector2d(std::cos(npc.state.heading), std::sin(npc.state.heading)) -
      ego.speed * Eigen::Vector2d(c, s);
  NpcSlot slot;
  slot.rel_s = c * dp.x() + s * dp.y();
  slot.rel_d = -s * dp.x() + c * dp.y();
  slot.rel_v_long = c * dv.x() + s * dv.y();
  slot.rel_v_lat = -s * dv.x() + c * dv.y();
  slot.present = true;
  slot.npc_id = npc.id;
  return slot;
}

}  // namespace

void ObservationConfig::validate() const {
  require(slots >= 2, "observation.slots must be >= 2");
  require(positive(far_distance), "observation.far_distance must be > 0");
  require(positive(speed_scale) && positive(distance_scale) && positive(lateral_scale) &&
              positive(yaw_rate_scale),
          "observation scales must be > 0");
}

Eigen::VectorXd Observation::features(const ObservationConfig& cfg) const {
  Eigen::VectorXd x(cfg.dimension());
  x(0) = ego_speed / cfg.speed_scale;
  x(1) = ego_yaw_rate / cfg.yaw_rate_scale;
  x(2) = ego_lateral / cfg.lateral_scale;
  for (int k = 0; k < cfg.slots; ++k) {
    const int o = 3 + 5 * k;
    if (k < static_cast<int>(slots.size()) && slots[static_cast<std::size_t>(k)].present) {
      const auto& sl = slots[static_cast<std::size_t>(k)];
      x(o + 0) = sl.rel_s / cfg.distance_scale;
      x(o + 1) = sl.rel_d / cfg.lateral_scale;
      x(o + 2) = sl.rel_v_long / cfg.speed_scale;
      x(o + 3) = sl.rel_v_lat / cfg.speed_scale;
      x(o + 4) = 1.0;
    } else {
      x.segment(o, 5).setZero();
      x(o) = cfg.far_distance / cfg.distance_scale;
    }
  }
  return x;
}

Observation encode_observation(const WorldState& world, const RoadModel& road,
                               const ObservationConfig& cfg) {
  (void)road;
  const VehicleState& ego = world.ego;
  Observation obs;
  obs.ego_speed = ego.speed;
  obs.ego_yaw_rate = ego.yaw_rate;
  obs.ego_lateral = ego.d;

  NpcSlot empty;
  empty.rel_s = cfg.far_distance;
  obs.slots.assign(static_cast<std::size_t>(cfg.slots), empty);

  const Npc* ahead = nullptr;
  const Npc* oncoming = nullptr;
  for (const auto& npc : world.npcs) {
    const double ds = npc.state.s - ego.s;
    if (npc.lane == Lane::Ego) {
      if (ds > 0.0 && (!ahead || ds < ahead->state.s - ego.s)) ahead = &npc;
    } else {
      const double passed = -0.5 * (ego.length + npc.state.length);
      if (ds > passed && (!oncoming || ds < oncoming->state.s - ego.s)) oncoming = &npc;
    }
  }
  if (ahead) obs.slots[0] = make_slot(ego, *ahead);
  if (oncoming) obs.slots[1] = make_slot(ego, *oncoming);

  std::vector<const Npc*> rest;
  for (const auto& npc : world.npcs)
    if (&npc != ahead && &npc != oncoming) rest.push_back(&npc);
  std::stable_sort(rest.begin(), rest.end(), [&](const Npc* a, const Npc* b) {
    return std::abs(a->state.s - ego.s) < std::abs(b->state.s - ego.s);
  });
  for (std::size_t k = 2, i = 0; k < obs.slots.size() && i < rest.size(); ++k, ++i)
    obs.slots[k] = make_slot(ego, *rest[i]);
  return obs;
}

void RewardConfig::validate() const {
  require(std::isfinite(w_progress) && w_progress >= 0.0, "reward.w_progress must be >= 0");
  require(std::isfinite(goal_bonus) && goal_bonus >= 0.0, "reward.goal_bonus must be >= 0");
  require(std::isfinite(crash_penalty) && crash_penalty >= 0.0,
          "reward.crash_penalty must be >= 0");
  require(std::isfinite(switch_penalty) && switch_penalty >= 0.0,
          "reward.switch_penalty must be >= 0");
}

double distance_to_goal(const WorldState& world, const RoadModel& road) {
  return std::max(road.goal_s - world.ego.s, 0.0);
}

double reward(const WorldState& prev, Action, const WorldState& next, const RoadModel& road,
              const RewardConfig& cfg) {
  double r = cfg.w_progress / (1.0 + distance_to_goal(next, road));
  if (const auto ev = next.terminal_event()) {
    switch (ev->kind) {
      case WorldEvent::Kind::GoalReached: r += cfg.goal_bonus; break;
      case WorldEvent::Kind::Collision:
      case WorldEvent::Kind::OffRoad: r -= cfg.crash_penalty; break;
      case WorldEvent::Kind::Timeout: break;
    }
  }
  if (prev.ego_target_lane != next.ego_target_lane) r -= cfg.switch_penalty;
  return r;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity > 0, "replay buffer capacity must be > 0");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("ReplayBuffer::at");
  return data_[(head_ + i) % data_.size()];
}

double TrainConfig::epsilon_at(std::int64_t iteration) const {
  const double decay_steps = epsilon_decay_fraction * static_cast<double>(iterations);
  if (decay_steps <= 0.0) return epsilon_end;
  const double u = std::clamp(static_cast<double>(iteration) / decay_steps, 0.0, 1.0);
  return epsilon_start + (epsilon_end - epsilon_start) * u;
}

void TrainConfig::validate() const {
  require(std::isfinite(gamma) && gamma >= 0.0 && gamma < 1.0, "train.gamma must be in [0, 1)");
  require(positive(learning_rate), "train.learning_rate must be > 0");
  require(batch_size >= 1, "train.batch_size must be >= 1");
  require(target_sync_period >= 1, "train.target_sync_period must be >= 1");
  require(epsilon_start >= 0.0 && epsilon_start <= 1.0, "train.epsilon_start must be in [0, 1]");
  require(epsilon_end >= 0.0 && epsilon_end <= 1.0, "train.epsilon_end must be in [0, 1]");
  require(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0,
          "train.epsilon_decay_fraction must be in [0, 1]");
  require(iterations >= 0, "train.iterations must be >= 0");
  require(learning_starts >= 0, "train.learning_starts must be >= 0");
  require(buffer_capacity >= 1, "train.buffer_capacity must be >= 1");
  require(std::isfinite(grad_clip) && grad_clip >= 0.0, "train.grad_clip must be >= 0");
  for (int h : hidden) require(h >= 1, "train.hidden sizes must be >= 1");
}

int argmax_action(const Eigen::VectorXd& q) {
  int best = 0;
  for (int i = 1; i < q.size(); ++i)
    if (q(i) > q(best)) best = i;
  return best;
}

Action select_greedy(const QNet& net, const Eigen::VectorXd& obs) {
  return static_cast<Action>(argmax_action(net.forward(obs)));
}

Eigen::VectorXd td_targets(const std::vector<const Transition*>& batch, const QNet& target_net,
                           double gamma) {
  require(!batch.empty(), "td_targets: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd next(target_net.input_size(), n);
  for (Eigen::Index j = 0; j < n; ++j) next.col(j) = batch[static_cast<std::size_t>(j)]->s_next;
  const Eigen::MatrixXd q_next = target_net.forward(next);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = *batch[static_cast<std::size_t>(j)];
    y(j) = t.done ? t.r : t.r + gamma * q_next.col(j).maxCoeff();
  }
  return y;
}

std::optional<double> train_on_batch(QNet& net, QNet& target_net,
                                     const std::vector<const Transition*>& batch,
                                     const TrainConfig& cfg, std::int64_t step_index) {
  if (batch.empty()) return std::nullopt;
  const Eigen::VectorXd y = td_targets(batch, target_net, cfg.gamma);
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd states(net.input_size(), n);
  std::vector<int> actions(batch.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    states.col(j) = batch[static_cast<std::size_t>(j)]->s;
    actions[static_cast<std::size_t>(j)] = action_code(batch[static_cast<std::size_t>(j)]->a);
  }

  std::vector<QNet::Layer> grad;
  const double loss = net.loss_gradient(states, actions, y, grad);

  double scale = cfg.learning_rate;
  if (cfg.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto& g : grad) sq += g.weights.squaredNorm() + g.bias.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > cfg.grad_clip) scale *= cfg.grad_clip / norm;
  }
  for (std::size_t k = 0; k < grad.size(); ++k) {
    net.layers()[k].weights -= scale * grad[k].weights;
    net.layers()[k].bias -= scale * grad[k].bias;
  }
  if (step_index % cfg.target_sync_period == 0) target_net = net;
  return loss;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  double g = 0.0, discount = 1.0;
  for (double r : rewards) {
    g += discount * r;
    discount *= gamma;
  }
  return g;
}

void write_qnet(std::ostream& out, const QNet& net) {
  out << "qnet v1\n";
  const auto& dims = net.dims();
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? " " : "") << dims[i];
  out << '\n';
  out << std::setprecision(17);
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        out << (c ? " " : "") << layer.weights(r, c);
      out << '\n';
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out << (r ? " " : "") << layer.bias(r);
    out << '\n';
  }
}

QNet read_qnet(std::istream& in) {
  std::string header;
  std::getline(in, header);
  if (header != "qnet v1") throw std::runtime_error("model file: expected header 'qnet v1'");
  std::string dims_line;
  std::getline(in, dims_line);
  std::istringstream ds(dims_line);
  std::vector<int> dims;
  for (int d; ds >> d;) dims.push_back(d);
  QNet net(dims);
  for (auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        if (!(in >> layer.weights(r, c))) throw std::runtime_error("model file: truncated");
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      if (!(in >> layer.bias(r))) throw std::runtime_error("model file: truncated");
  }
  std::string extra;
  if (in >> extra) throw std::runtime_error("model file: trailing data");
  return net;
}

void save_qnet(const std::string& path, const QNet& net) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_qnet(out, net);
  if (!out) throw std::runtime_error("failed writing " + path);
}

QNet load_qnet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  return read_qnet(in);
}

}  // namespace overtake
