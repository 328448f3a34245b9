#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace overtake {

/// Numerically stable softplus, log(1 + e^x).
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

/// Derivative of softplus, the logistic function.
template <typename Scalar>
Scalar logistic(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-x))
                        : exp(x) / (Scalar(1) + exp(x));
}

template <typename Scalar>
struct DenseLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;  // out x in
  Vector bias;     // out

  bool operator==(const DenseLayer& o) const {
    return weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() &&
           weights == o.weights && bias == o.bias;
  }
};

/// Feed-forward action-value approximator: softplus hidden layers, linear
/// output with one value per action.
template <typename Scalar>
class QNetwork {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Layer = DenseLayer<Scalar>;

  QNetwork() = default;

  /// Zero-initialised network with the given layer sizes, input first.
  explicit QNetwork(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw std::invalid_argument("QNetwork: need at least two layer sizes");
    for (int d : dims_)
      if (d < 1) throw std::invalid_argument("QNetwork: layer sizes must be >= 1");
    for (std::size_t i = 0; i + 1 < dims_.size(); ++i)
      layers_.push_back({Matrix::Zero(dims_[i + 1], dims_[i]), Vector::Zero(dims_[i + 1])});
  }

  /// Uniform Glorot initialisation, biases zero.
  template <typename Rng>
  static QNetwork glorot(std::vector<int> dims, Rng& rng) {
    QNetwork net(std::move(dims));
    for (auto& layer : net.layers_) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
          layer.weights(r, c) = Scalar(u(rng));
    }
    return net;
  }

  const std::vector<int>& dims() const { return dims_; }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Values for a batch of observations stored column-wise.
  Matrix forward(const Matrix& inputs) const {
    check_input(inputs.rows());
    Matrix a = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix z = (layers_[i].weights * a).colwise() + layers_[i].bias;
      a = last(i) ? z : z.unaryExpr([](Scalar x) { return softplus(x); });
    }
    return a;
  }

  Vector forward(const Vector& input) const {
    return forward(Matrix(input)).col(0);
  }

  bool operator==(const QNetwork& o) const { return dims_ == o.dims_ && layers_ == o.layers_; }

  /// Gradient of mean_i (target_i - Q(x_i, a_i))^2 with respect to every
  /// parameter, by reverse-mode accumulation. Returns the loss.
  Scalar loss_gradient(const Matrix& inputs, const std::vector<int>& actions,
                       const Vector& targets, std::vector<Layer>& grad) const {
    check_input(inputs.rows());
    const Eigen::Index n = inputs.cols();
    if (n == 0 || static_cast<Eigen::Index>(actions.size()) != n || targets.size() != n)
      throw std::invalid_argument("QNetwork::loss_gradient: batch shape mismatch");

    std::vector<Matrix> pre;          // pre-activations per layer
    std::vector<Matrix> post{inputs}; // activations, post[0] = inputs
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix z = (layers_[i].weights * post.back()).colwise() + layers_[i].bias;
      post.push_back(last(i) ? z : z.unaryExpr([](Scalar x) { return softplus(x); }));
      pre.push_back(std::move(z));
    }

    const Matrix& q = post.back();
    Matrix delta = Matrix::Zero(q.rows(), n);
    Scalar loss(0);
    for (Eigen::Index j = 0; j < n; ++j) {
      const int a = actions[static_cast<std::size_t>(j)];
      if (a < 0 || a >= q.rows())
        throw std::invalid_argument("QNetwork::loss_gradient: action index out of range");
      const Scalar err = q(a, j) - targets(j);
      loss += err * err;
      delta(a, j) = Scalar(2) * err / Scalar(n);
    }
    loss /= Scalar(n);

    grad.resize(layers_.size());
    for (std::size_t k = layers_.size(); k-- > 0;) {
      grad[k].weights = delta * post[k].transpose();
      grad[k].bias = delta.rowwise().sum();
      if (k == 0) break;
      delta = (layers_[k].weights.transpose() * delta)
                  .cwiseProduct(pre[k - 1].unaryExpr([](Scalar x) { return logistic(x); }));
    }
    return loss;
  }

 private:
  bool last(std::size_t i) const { return i + 1 == layers_.size(); }

  void check_input(Eigen::Index rows) const {
    if (layers_.empty()) throw std::logic_error("QNetwork: empty network");
    if (rows != input_size())
      throw std::invalid_argument("QNetwork: observation dimension " + std::to_string(rows) +
                                  " does not match network input " +
                                  std::to_string(input_size()));
  }

  std::vector<int> dims_;
  std::vector<Layer> layers_;
};

using QNet = QNetwork<double>;

/// Writes `qnet v1`, the layer sizes, then every weight matrix (row-major)
/// followed by its bias, with 17 significant digits.
void write_qnet(std::ostream& out, const QNet& net);
QNet read_qnet(std::istream& in);
void save_qnet(const std::string& path, const QNet& net);
QNet load_qnet(const std::string& path);

}  // namespace overtake
