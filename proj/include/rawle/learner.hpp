#pragma once

// Feedforward Q-network with experience replay, a target network and Huber
// loss. Everything here is written against Eigen dense types; no autodiff.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rawle/env.hpp"

namespace rawle {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { Sgd, Adam };

struct LearnerConfig {
  int batch_size = 64;
  int target_sync_period = 50;
  double epsilon_start = 0.9;
  double epsilon_end = 0.0;
  double eval_epsilon = 0.0;
  double learning_rate = 1e-4;
  double discount = 0.99;
  int replay_capacity = 10000;
  int hidden_layers = 2;
  int hidden_units = 128;
  double huber_delta = 1.0;
  OptimizerKind optimizer = OptimizerKind::Sgd;

  void validate() const;
  bool operator==(const LearnerConfig&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

// Rectifier on hidden layers, identity on the output layer.
class QNetwork {
 public:
  QNetwork() = default;
  // Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  QNetwork(const std::vector<int>& dims, Rng& rng);

  static QNetwork zeros(const std::vector<int>& dims);
  static std::vector<int> layout(int inputs, int outputs, int hidden_layers, int hidden_units);

  int input_size() const;
  int output_size() const;
  std::vector<int> dims() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Eigen::VectorXd forward(std::span<const double> features) const;
  // Columns are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  std::size_t parameter_count() const;
  bool all_finite() const;

  bool operator==(const QNetwork& other) const;

 private:
  std::vector<DenseLayer> layers_;
};

struct Gradients {
  std::vector<DenseLayer> layers;
};

double huber(double prediction, double target, double delta = 1.0);
double huber_derivative(double prediction, double target, double delta = 1.0);

// Mean Huber loss over the batch, counting only the acted output of each
// sample. Writes dLoss/dParameters into grads when non-null.
double q_loss(const QNetwork& net, const Eigen::MatrixXd& inputs, std::span<const int> actions,
              std::span<const double> targets, double delta, Gradients* grads);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);
  void apply(QNetwork& net, const Gradients& grads);
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  double learning_rate_;
  long steps_ = 0;
  std::vector<DenseLayer> m_, v_;
};

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void push(Transition t);
  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  // Entry i counted from the oldest retained transition.
  const Transition& at(int i) const;
  // batch distinct entries, uniformly without replacement.
  std::vector<int> sample_indices(int batch, Rng& rng) const;

 private:
  int capacity_;
  int head_ = 0;  // oldest entry once full
  std::vector<Transition> entries_;
};

int argmax_lowest(std::span<const double> values);

int select_action(const QNetwork& net, std::span<const double> features, double epsilon, Rng& rng);

// TD targets r' + gamma * max_a target(s') with no bootstrap on terminal
// transitions.
std::vector<double> td_targets(const QNetwork& target_net, std::span<const Transition* const> batch,
                               double discount);

// One gradient step on the batch. Returns the mean loss before the update.
double train_batch(QNetwork& net, const QNetwork& target_net,
                   std::span<const Transition* const> batch, const LearnerConfig& config,
                   Optimizer& optimizer);

// Copies the online weights into target when step is a multiple of period.
bool sync_target(const QNetwork& net, QNetwork& target_net, long step, int period);

// Text tensor format:
//   rawle-qnet 1
//   <layer count>
//   per layer: "<out> <in>" then out*in weights row-major, then out biases
// Values are written with max_digits10 so a reload is bit-exact.
void save_network(const QNetwork& net, const std::filesystem::path& path);
QNetwork load_network(const std::filesystem::path& path);

// Online net, target net, replay memory and optimizer state of one agent.
class DqnLearner {
 public:
  DqnLearner(int inputs, const LearnerConfig& config, std::uint64_t seed);

  int act(std::span<const double> features, double epsilon);
  void remember(Transition t) { replay_.push(std::move(t)); }
  // Called once per agent step: trains on one sampled batch once the buffer
  // holds batch_size entries and syncs the target every target_sync_period
  // steps.
  std::optional<double> learn();

  const QNetwork& online() const { return online_; }
  QNetwork& online() { return online_; }
  const QNetwork& target() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }
  long steps() const { return steps_; }

 private:
  LearnerConfig config_;
  Rng rng_;
  QNetwork online_;
  QNetwork target_;
  ReplayBuffer replay_;
  Optimizer optimizer_;
  long steps_ = 0;
};

}  // namespace rawle
