#pragma once

#include "reload/domain.hpp"
#include "reload/error.hpp"
#include "reload/qlearning.hpp"
#include "reload/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace reload {

/// Fully connected network: ReLU on hidden layers, identity on the output layer.
/// weights[l] maps layer l (cols) to layer l + 1 (rows).
template <typename Scalar>
struct QNetwork {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static QNetwork zeros(const std::vector<std::size_t>& sizes) {
    if (sizes.size() < 2) throw Error(ErrorCode::InvalidArgument, "network needs at least two layers");
    QNetwork net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      net.weights.push_back(Matrix::Zero(static_cast<Eigen::Index>(sizes[l + 1]),
                                         static_cast<Eigen::Index>(sizes[l])));
      net.biases.push_back(Vector::Zero(static_cast<Eigen::Index>(sizes[l + 1])));
    }
    return net;
  }

  // He-uniform weights, zero biases.
  static QNetwork random(const std::vector<std::size_t>& sizes, CounterRng& rng) {
    QNetwork net = zeros(sizes);
    for (auto& W : net.weights) {
      const Scalar limit = std::sqrt(Scalar(6) / static_cast<Scalar>(W.cols()));
      W = W.unaryExpr([&](Scalar) { return limit * static_cast<Scalar>(2.0 * rng.uniform() - 1.0); });
    }
    return net;
  }

  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> sizes;
    if (weights.empty()) return sizes;
    sizes.push_back(static_cast<std::size_t>(weights.front().cols()));
    for (const auto& W : weights) sizes.push_back(static_cast<std::size_t>(W.rows()));
    return sizes;
  }

  std::size_t inputs() const { return static_cast<std::size_t>(weights.front().cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.back().rows()); }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l)
      if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    return true;
  }

  // Visits every parameter in a fixed order (layer by layer, weights column-major, then biases).
  template <typename F>
  void for_each_parameter(F&& f) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index i = 0; i < weights[l].size(); ++i) f(weights[l].data()[i]);
      for (Eigen::Index i = 0; i < biases[l].size(); ++i) f(biases[l].data()[i]);
    }
  }

  template <typename Other>
  QNetwork<Other> cast() const {
    QNetwork<Other> out;
    for (const auto& W : weights) out.weights.push_back(W.template cast<Other>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
    return out;
  }

  friend bool operator==(const QNetwork& a, const QNetwork& b) {
    if (a.weights.size() != b.weights.size()) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
      if (a.weights[l].rows() != b.weights[l].rows() || a.weights[l].cols() != b.weights[l].cols())
        return false;
      if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
    }
    return true;
  }
};

using QNetworkd = QNetwork<double>;

template <typename Scalar>
bool same_architecture(const QNetwork<Scalar>& a, const QNetwork<Scalar>& b) {
  return a.layer_sizes() == b.layer_sizes();
}

template <typename Scalar>
typename QNetwork<Scalar>::Vector forward(const QNetwork<Scalar>& net,
                                          const typename QNetwork<Scalar>::Vector& x) {
  typename QNetwork<Scalar>::Vector h = x;
  const std::size_t last = net.weights.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    h = net.weights[l] * h + net.biases[l];
    if (l != last) h = h.cwiseMax(Scalar(0));
  }
  return h;
}

/// One stored interaction. States are normalized (RT, ER) features.
struct Transition {
  Eigen::Vector2d state = Eigen::Vector2d::Zero();
  std::size_t action = 0;
  double reward = 0.0;
  Eigen::Vector2d next_state = Eigen::Vector2d::Zero();
  bool terminal = false;
};

/// Bellman target: r on terminal transitions, r + gamma max_a' Q_target(s', a') otherwise.
template <typename Scalar>
Scalar dqn_target(const QNetwork<Scalar>& target_net, const Transition& t, Scalar gamma) {
  Scalar y = static_cast<Scalar>(t.reward);
  if (!t.terminal) y += gamma * forward(target_net, t.next_state.cast<Scalar>().eval()).maxCoeff();
  return y;
}

/// Mean squared TD error over the batch. When grad is non-null it receives dLoss/dparam
/// with the same shape as net (the target network is held fixed).
template <typename Scalar>
Scalar loss_and_gradient(const QNetwork<Scalar>& net, const QNetwork<Scalar>& target_net,
                         std::span<const Transition> batch, Scalar gamma,
                         QNetwork<Scalar>* grad = nullptr) {
  using Vector = typename QNetwork<Scalar>::Vector;
  const std::size_t L = net.weights.size();
  if (grad) {
    *grad = QNetwork<Scalar>::zeros(net.layer_sizes());
  }
  const Scalar n = static_cast<Scalar>(batch.size());
  Scalar loss = 0;
  std::vector<Vector> act(L + 1);
  for (const Transition& t : batch) {
    act[0] = t.state.cast<Scalar>();
    for (std::size_t l = 0; l < L; ++l) {
      act[l + 1] = net.weights[l] * act[l] + net.biases[l];
      if (l + 1 != L) act[l + 1] = act[l + 1].cwiseMax(Scalar(0));
    }
    const auto a = static_cast<Eigen::Index>(t.action);
    const Scalar diff = act[L](a) - dqn_target(target_net, t, gamma);
    loss += diff * diff / n;
    if (!grad) continue;

    Vector delta = Vector::Zero(act[L].size());
    delta(a) = Scalar(2) * diff / n;
    for (std::size_t l = L; l-- > 0;) {
      grad->weights[l].noalias() += delta * act[l].transpose();
      grad->biases[l] += delta;
      if (l == 0) break;
      delta = (net.weights[l].transpose() * delta).cwiseProduct(
          (act[l].array() > Scalar(0)).template cast<Scalar>().matrix());
    }
  }
  return loss;
}

/// One plain SGD step with step size alpha. Returns the batch loss before the step.
/// When max_norm > 0 the gradient is rescaled so that its global L2 norm is at most max_norm.
template <typename Scalar>
Scalar train_step(QNetwork<Scalar>& net, const QNetwork<Scalar>& target_net,
                  std::span<const Transition> batch, Scalar alpha, Scalar gamma, Scalar max_norm = 0) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "train_step needs a nonempty batch");
  QNetwork<Scalar> grad;
  const Scalar loss = loss_and_gradient(net, target_net, batch, gamma, &grad);
  Scalar scale = alpha;
  if (max_norm > 0) {
    Scalar sq = 0;
    grad.for_each_parameter([&sq](Scalar g) { sq += g * g; });
    const Scalar norm = std::sqrt(sq);
    if (norm > max_norm) scale *= max_norm / norm;
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    net.weights[l] -= scale * grad.weights[l];
    net.biases[l] -= scale * grad.biases[l];
  }
  return loss;
}

template <typename Scalar>
void sync_target(const QNetwork<Scalar>& net, QNetwork<Scalar>& target_net) {
  if (!same_architecture(net, target_net))
    throw Error(ErrorCode::ArchMismatch, "online and target networks differ in shape");
  target_net = net;
}

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000);

  void push(const Transition& t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  // Uniform sampling with replacement. Throws InvalidArgument when size() < batch.
  std::vector<Transition> sample(std::size_t batch, CounterRng& rng) const;
  const std::vector<Transition>& items() const noexcept { return items_; }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

struct DqnParams {
  std::size_t hidden = 16;
  std::size_t hidden_layers = 2;
  std::size_t buffer_capacity = 1000;
  std::size_t batch_size = 32;
  std::size_t sync_every = 25;
  double learning_rate = 0.5;
  double gamma = 0.5;
  // Slower than the tabular decay: the network needs more exploratory transitions.
  EpsilonSchedule epsilon = EpsilonSchedule::decaying(0.9, 0.95);
  double feature_cap = 2.0;
  double max_grad_norm = 1.0;  // 0 disables clipping

  std::vector<std::size_t> layer_sizes(std::size_t actions) const;
};

Eigen::Vector2d state_features(const PerfMeasurement& m, const TestObjective& obj, double cap = 2.0);

struct DqnAgent {
  QNetworkd online;
  QNetworkd target;
  ReplayBuffer buffer;
  std::uint64_t env_steps = 0;

  DqnAgent(const DqnParams& params, std::size_t actions, std::uint64_t seed);
};

EpisodeTrace run_episode_dqn(Environment& env, DqnAgent& agent, const DqnParams& params,
                             const TestObjective& objective, const EpisodeOptions& options,
                             std::uint64_t episode, double epsilon);

}  // namespace reload

namespace reload {

struct InitialLearningResult;

/// DQN counterpart of run_initial_learning: the snapshot holds the online network.
InitialLearningResult run_dqn_learning(Environment& env, const DqnParams& params,
                                       const TestObjective& objective, std::size_t episodes,
                                       const EpisodeOptions& options);

}  // namespace reload
