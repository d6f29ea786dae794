#include "rawle/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <string>

namespace rawle {

void LearnerConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (target_sync_period < 1) throw ConfigError("target_sync_period must be at least 1");
  for (double e : {epsilon_start, epsilon_end, eval_epsilon})
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon values must lie in [0, 1]");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (replay_capacity < batch_size) throw ConfigError("replay_capacity must be >= batch_size");
  if (hidden_layers < 0 || hidden_units < 1) throw ConfigError("invalid hidden layer layout");
  if (!(huber_delta > 0.0)) throw ConfigError("huber_delta must be positive");
}

QNetwork::QNetwork(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("network needs at least two layer sizes");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weights(r, c) = dist(rng);
    layers_.push_back(std::move(layer));
  }
}

QNetwork QNetwork::zeros(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("network needs at least two layer sizes");
  QNetwork net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    net.layers_.push_back({Eigen::MatrixXd::Zero(dims[l + 1], dims[l]),
                           Eigen::VectorXd::Zero(dims[l + 1])});
  return net;
}

std::vector<int> QNetwork::layout(int inputs, int outputs, int hidden_layers, int hidden_units) {
  std::vector<int> dims{inputs};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_units);
  dims.push_back(outputs);
  return dims;
}

int QNetwork::input_size() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols());
}

int QNetwork::output_size() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows());
}

std::vector<int> QNetwork::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(input_size());
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.weights.rows()));
  return d;
}

Eigen::VectorXd QNetwork::forward(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != input_size())
    throw std::invalid_argument("feature length " + std::to_string(features.size()) +
                                " does not match network input " + std::to_string(input_size()));
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                        static_cast<Eigen::Index>(features.size()));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].weights * h + layers_[l].bias;
    if (l + 1 < layers_.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

Eigen::MatrixXd QNetwork::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_size())
    throw std::invalid_argument("batch row count does not match network input");
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * h;
    z.colwise() += layers_[l].bias;
    h = (l + 1 < layers_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
  }
  return h;
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool QNetwork::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

bool QNetwork::operator==(const QNetwork& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols()) return false;
    if (a.weights != b.weights || a.bias != b.bias) return false;
  }
  return true;
}

double huber(double prediction, double target, double delta) {
  const double r = std::abs(prediction - target);
  return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
}

double huber_derivative(double prediction, double target, double delta) {
  return std::clamp(prediction - target, -delta, delta);
}

double q_loss(const QNetwork& net, const Eigen::MatrixXd& inputs, std::span<const int> actions,
              std::span<const double> targets, double delta, Gradients* grads) {
  const auto& layers = net.layers();
  const Eigen::Index batch = inputs.cols();
  if (batch == 0) throw std::invalid_argument("empty batch");
  if (actions.size() != static_cast<std::size_t>(batch) || targets.size() != actions.size())
    throw std::invalid_argument("batch, action and target sizes differ");

  // Keep every layer's activation for the backward pass.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weights * acts.back();
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }

  const Eigen::MatrixXd& q = acts.back();
  Eigen::MatrixXd delta_out = Eigen::MatrixXd::Zero(q.rows(), batch);
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= q.rows()) throw std::invalid_argument("action index out of range");
    const double p = q(a, i);
    const double t = targets[static_cast<std::size_t>(i)];
    loss += huber(p, t, delta);
    delta_out(a, i) = huber_derivative(p, t, delta) * scale;
  }
  loss *= scale;
  if (!grads) return loss;

  grads->layers.resize(layers.size());
  Eigen::MatrixXd d = std::move(delta_out);
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads->layers[l].weights = d * acts[l].transpose();
    grads->layers[l].bias = d.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers[l].weights.transpose() * d;
    // Rectifier derivative, taken as 0 at exactly 0.
    d = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), learning_rate_(learning_rate) {}

void Optimizer::apply(QNetwork& net, const Gradients& grads) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size()) throw std::invalid_argument("gradient shape mismatch");
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].weights -= learning_rate_ * grads.layers[l].weights;
      layers[l].bias -= learning_rate_ * grads.layers[l].bias;
    }
    return;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  if (m_.empty()) {
    for (const auto& l : layers) {
      m_.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                    Eigen::VectorXd::Zero(l.bias.size())});
    }
    v_ = m_;
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps_));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    param.array() -= learning_rate_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, m_[l].weights, v_[l].weights, grads.layers[l].weights);
    update(layers[l].bias, m_[l].bias, v_[l].bias, grads.layers[l].bias);
  }
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("replay capacity must be positive");
  entries_.reserve(static_cast<std::size_t>(std::min(capacity, 1 << 16)));
}

void ReplayBuffer::push(Transition t) {
  if (size() < capacity_) {
    entries_.push_back(std::move(t));
    return;
  }
  entries_[static_cast<std::size_t>(head_)] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(int i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("replay index out of range");
  return entries_[static_cast<std::size_t>((head_ + i) % size())];
}

std::vector<int> ReplayBuffer::sample_indices(int batch, Rng& rng) const {
  if (batch > size()) throw std::invalid_argument("batch larger than replay contents");
  // Rejection sampling; batches are small next to the buffer.
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(batch));
  std::uniform_int_distribution<int> pick(0, size() - 1);
  if (2 * batch > size()) {
    std::vector<int> all(static_cast<std::size_t>(size()));
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < batch; ++i) {
      const int j = std::uniform_int_distribution<int>(i, size() - 1)(rng);
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(batch));
    return all;
  }
  while (static_cast<int>(idx.size()) < batch) {
    const int j = pick(rng);
    if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
  }
  return idx;
}

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty range");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  return best;
}

int select_action(const QNetwork& net, std::span<const double> features, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon outside [0, 1]");
  if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon)
    return std::uniform_int_distribution<int>(0, net.output_size() - 1)(rng);
  const Eigen::VectorXd q = net.forward(features);
  return argmax_lowest({q.data(), static_cast<std::size_t>(q.size())});
}

namespace {

Eigen::MatrixXd stack_states(std::span<const Transition* const> batch, bool next) {
  const auto& first = next ? batch.front()->next_state : batch.front()->state;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(first.size()), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& v = next ? batch[i]->next_state : batch[i]->state;
    if (v.size() != first.size()) throw std::invalid_argument("ragged feature vectors in batch");
    m.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return m;
}

}  // namespace

std::vector<double> td_targets(const QNetwork& target_net, std::span<const Transition* const> batch,
                               double discount) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const Eigen::MatrixXd next_q = target_net.forward_batch(stack_states(batch, true));
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    targets[i] = batch[i]->reward;
    if (!batch[i]->done) targets[i] += discount * next_q.col(static_cast<Eigen::Index>(i)).maxCoeff();
  }
  return targets;
}

double train_batch(QNetwork& net, const QNetwork& target_net,
                   std::span<const Transition* const> batch, const LearnerConfig& config,
                   Optimizer& optimizer) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto targets = td_targets(target_net, batch, config.discount);
  std::vector<int> actions(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) actions[i] = batch[i]->action;
  Gradients grads;
  const double loss = q_loss(net, stack_states(batch, false), actions, targets, config.huber_delta, &grads);
  if (!std::isfinite(loss)) throw TrainingError("non-finite training loss");
  optimizer.apply(net, grads);
  return loss;
}

bool sync_target(const QNetwork& net, QNetwork& target_net, long step, int period) {
  if (period < 1) throw std::invalid_argument("target sync period must be at least 1");
  if (step % period != 0) return false;
  target_net = net;
  return true;
}

void save_network(const QNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write network file " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "rawle-qnet 1\n" << net.layers().size() << '\n';
  for (const auto& l : net.layers()) {
    out << l.weights.rows() << ' ' << l.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out << (c ? " " : "") << l.weights(r, c);
      out << '\n';
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out << (r ? " " : "") << l.bias(r);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing network file " + path.string());
}

QNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read network file " + path.string());
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  in >> magic >> version >> count;
  if (magic != "rawle-qnet" || version != 1 || !in)
    throw std::runtime_error("not a rawle network file: " + path.string());
  std::vector<int> dims;
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < count; ++l) {
    Eigen::Index rows = 0, cols = 0;
    in >> rows >> cols;
    if (!in || rows < 1 || cols < 1) throw std::runtime_error("bad layer header in " + path.string());
    if (!dims.empty() && dims.back() != cols)
      throw std::runtime_error("layer dimensions do not chain in " + path.string());
    if (dims.empty()) dims.push_back(static_cast<int>(cols));
    dims.push_back(static_cast<int>(rows));
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) in >> layer.weights(r, c);
    for (Eigen::Index r = 0; r < rows; ++r) in >> layer.bias(r);
    if (!in) throw std::runtime_error("truncated network file " + path.string());
    layers.push_back(std::move(layer));
  }
  QNetwork net = QNetwork::zeros(dims);
  net.layers() = std::move(layers);
  return net;
}

DqnLearner::DqnLearner(int inputs, const LearnerConfig& config, std::uint64_t seed)
    : config_(config),
      rng_(seed),
      online_(QNetwork::layout(inputs, kActionCount, config.hidden_layers, config.hidden_units), rng_),
      target_(online_),
      replay_(config.replay_capacity),
      optimizer_(config.optimizer, config.learning_rate) {
  config_.validate();
}

int DqnLearner::act(std::span<const double> features, double epsilon) {
  return select_action(online_, features, epsilon, rng_);
}

std::optional<double> DqnLearner::learn() {
  ++steps_;
  std::optional<double> loss;
  if (replay_.size() >= config_.batch_size) {
    const auto idx = replay_.sample_indices(config_.batch_size, rng_);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (int i : idx) batch.push_back(&replay_.at(i));
    loss = train_batch(online_, target_, batch, config_, optimizer_);
  }
  sync_target(online_, target_, steps_, config_.target_sync_period);
  return loss;
}

}  // namespace rawle
