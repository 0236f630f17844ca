#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "delaycast/matrix.hpp"
#include "delaycast/rng.hpp"

namespace delaycast::fcnn {

enum class ActivationKind { Relu, Sigmoid };

struct LayerSpec {
  enum class Kind { Dense, BatchNorm, Dropout, Activation };

  Kind kind = Kind::Dense;
  std::size_t width = 0;  // dense output width
  double rate = 0.0;      // dropout probability
  ActivationKind activation = ActivationKind::Relu;

  static LayerSpec dense(std::size_t out_width) { return {Kind::Dense, out_width, 0.0, ActivationKind::Relu}; }
  static LayerSpec batch_norm() { return {Kind::BatchNorm, 0, 0.0, ActivationKind::Relu}; }
  static LayerSpec dropout(double rate) { return {Kind::Dropout, 0, rate, ActivationKind::Relu}; }
  static LayerSpec relu() { return {Kind::Activation, 0, 0.0, ActivationKind::Relu}; }
  static LayerSpec sigmoid() { return {Kind::Activation, 0, 0.0, ActivationKind::Sigmoid}; }

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkConfig {
  std::size_t input_width = 0;
  std::size_t hidden_layers = 5;
  std::size_t hidden_units = 250;
  double dropout_rate = 0.2;
  bool batch_norm = true;
  std::size_t epochs = 75;
  std::size_t batch_size = 256;
  double learning_rate = 0.01;
  double momentum = 0.9;  // optimizer momentum
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  std::uint64_t seed = 0;

  // Throws ConfigError on an invalid combination.
  void validate() const;
};

// Hidden blocks (dense -> batch-norm -> relu -> dropout) followed by the
// dense(1) + sigmoid output.
std::vector<LayerSpec> layer_stack(const NetworkConfig& config);

struct Layer {
  LayerSpec spec;
  std::size_t in_width = 0;
  std::size_t out_width = 0;

  // dense
  Eigen::MatrixXd weight;  // in_width x out_width
  Vector bias;

  // batch norm
  Vector scale;
  Vector shift;
  Vector running_mean;
  Vector running_var;
};

enum class Mode { Train, Eval };

// Ordered stack of layers ending in dense(1) + sigmoid.
class Network {
 public:
  // Initializes dense weights uniformly in +-sqrt(6 / fan_in) from `seed`;
  // biases and shifts start at zero, scales at one.
  Network(std::size_t input_width, std::vector<LayerSpec> layers, std::uint64_t seed, double bn_momentum = 0.9,
          double bn_epsilon = 1e-5);

  static Network from_config(const NetworkConfig& config);

  std::size_t input_width() const { return input_width_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  double bn_momentum() const { return bn_momentum_; }
  double bn_epsilon() const { return bn_epsilon_; }

  // Trainable tensors in a fixed order: per dense layer weight then bias,
  // per batch-norm layer scale then shift.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::vector<std::string> parameter_names() const;

  // Index one past the last hidden layer, i.e. the output dense layer.
  std::size_t feature_end() const;
  std::size_t feature_width() const;

  // Bumped by every optimizer step; forward caches remember it.
  std::uint64_t generation() const { return generation_; }
  void mark_updated() { ++generation_; }

  bool operator==(const Network& other) const;

 private:
  std::size_t input_width_;
  std::vector<Layer> layers_;
  double bn_momentum_;
  double bn_epsilon_;
  std::uint64_t generation_ = 0;
};

// Everything backward() needs from a train-mode forward pass.
struct ForwardCache {
  Mode mode = Mode::Eval;
  std::uint64_t generation = 0;
  std::size_t rows = 0;
  std::vector<Matrix> inputs;      // input to each layer
  std::vector<Matrix> masks;       // dropout masks (already scaled), per layer
  std::vector<Matrix> normalized;  // batch-norm x-hat, per layer
  std::vector<Vector> inv_std;     // batch-norm 1/sqrt(var + eps), per layer
  Vector probabilities;
};

struct ForwardResult {
  Vector probabilities;
  ForwardCache cache;
};

// Train mode draws dropout masks from `rng` (required when the network has
// dropout) and updates batch-norm running statistics. Throws ShapeError when
// the batch width differs from the input width.
ForwardResult forward(Network& net, const Matrix& batch, Mode mode, Rng* rng = nullptr);

// Eval-mode probabilities; the network is not modified.
Vector predict(const Network& net, const Matrix& batch);

// Eval-mode activations of the final hidden block (the input of the output
// dense layer). Width is net.feature_width().
Matrix extract_features(const Network& net, const Matrix& batch);

inline constexpr double kProbabilityClamp = 1e-7;

// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
double bce_loss(const Vector& probabilities, const Labels& labels);

// One vector per tensor of Network::parameters(), same order and sizes.
struct Gradients {
  std::vector<std::vector<double>> values;
};

// Exact gradients of bce_loss for the batch in `cache`. Throws StateError when
// the cache came from an eval pass, from a network state that has since been
// updated, or from a batch of a different size than `labels`.
Gradients backward(const Network& net, const ForwardCache& cache, const Labels& labels);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(Network& net, const Gradients& grads) = 0;
};

// Gradient descent with classical momentum: v = mu * v - lr * g; p += v.
class MomentumSgd : public Optimizer {
 public:
  MomentumSgd(double learning_rate, double momentum) : learning_rate_(learning_rate), momentum_(momentum) {}
  void step(Network& net, const Gradients& grads) override;

 private:
  double learning_rate_;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

struct EpochStats {
  double train_loss = 0.0;
  std::optional<double> validation_loss;
  std::optional<double> validation_accuracy;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

struct ValidationSet {
  const Matrix& features;
  const Labels& labels;
};

// Runs config.epochs passes of shuffled mini-batches. Uses MomentumSgd from
// the config when `optimizer` is null. Throws DivergenceError naming the
// epoch on a non-finite loss.
TrainHistory train(Network& net, const Matrix& features, const Labels& labels, const NetworkConfig& config,
                   Optimizer* optimizer = nullptr, const std::optional<ValidationSet>& validation = std::nullopt);

struct TrainedNetwork {
  Network network;
  TrainHistory history;
};

// Builds a network from `config` and trains it.
TrainedNetwork fit_network(const Matrix& features, const Labels& labels, const NetworkConfig& config);

std::uint64_t parameter_checksum(const Network& net);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

}  // namespace delaycast::fcnn
