#include "delaycast/fcnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "delaycast/error.hpp"

namespace delaycast::fcnn {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const char* kind_name(LayerSpec::Kind kind) {
  switch (kind) {
    case LayerSpec::Kind::Dense: return "dense";
    case LayerSpec::Kind::BatchNorm: return "batch_norm";
    case LayerSpec::Kind::Dropout: return "dropout";
    case LayerSpec::Kind::Activation: return "activation";
  }
  return "?";
}

std::span<double> as_span(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const nlohmann::json& j, std::size_t expected) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != expected) throw DataError("network document: tensor has wrong size");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// Forward through layers [0, end) in eval mode.
Matrix eval_through(const Network& net, const Matrix& batch, std::size_t end) {
  if (static_cast<std::size_t>(batch.cols()) != net.input_width()) {
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " does not match network input width " +
                     std::to_string(net.input_width()));
  }
  Matrix x = batch;
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < end; ++i) {
    const Layer& layer = layers[i];
    switch (layer.spec.kind) {
      case LayerSpec::Kind::Dense: {
        Matrix y = x * layer.weight;
        y.rowwise() += layer.bias.transpose();
        x = std::move(y);
        break;
      }
      case LayerSpec::Kind::BatchNorm: {
        const Vector inv = (layer.running_var.array() + net.bn_epsilon()).rsqrt();
        const Vector a = layer.scale.cwiseProduct(inv);
        const Vector b = layer.shift - layer.running_mean.cwiseProduct(a);
        x = (x.array().rowwise() * a.transpose().array()).rowwise() + b.transpose().array();
        break;
      }
      case LayerSpec::Kind::Dropout:
        break;
      case LayerSpec::Kind::Activation:
        if (layer.spec.activation == ActivationKind::Relu) {
          x = x.cwiseMax(0.0);
        } else {
          x = x.unaryExpr([](double v) { return sigmoid(v); });
        }
        break;
    }
  }
  return x;
}

}  // namespace

void NetworkConfig::validate() const {
  if (input_width < 1) throw ConfigError("network input_width must be >= 1");
  if (hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) throw ConfigError("bn_momentum must lie in [0, 1)");
  if (!(bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be > 0");
}

std::vector<LayerSpec> layer_stack(const NetworkConfig& config) {
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < config.hidden_layers; ++i) {
    layers.push_back(LayerSpec::dense(config.hidden_units));
    if (config.batch_norm) layers.push_back(LayerSpec::batch_norm());
    layers.push_back(LayerSpec::relu());
    if (config.dropout_rate > 0.0) layers.push_back(LayerSpec::dropout(config.dropout_rate));
  }
  layers.push_back(LayerSpec::dense(1));
  layers.push_back(LayerSpec::sigmoid());
  return layers;
}

Network::Network(std::size_t input_width, std::vector<LayerSpec> layers, std::uint64_t seed, double bn_momentum,
                 double bn_epsilon)
    : input_width_(input_width), bn_momentum_(bn_momentum), bn_epsilon_(bn_epsilon) {
  if (input_width < 1) throw ConfigError("network input width must be >= 1");
  if (layers.size() < 2 || layers.back() != LayerSpec::sigmoid() || layers[layers.size() - 2] != LayerSpec::dense(1)) {
    throw ConfigError("network must end with dense(1) followed by sigmoid");
  }
  Rng rng(Rng::derive_seed(seed, 0));
  std::size_t width = input_width;
  for (const auto& spec : layers) {
    Layer layer;
    layer.spec = spec;
    layer.in_width = width;
    layer.out_width = width;
    const auto n = static_cast<Eigen::Index>(width);
    switch (spec.kind) {
      case LayerSpec::Kind::Dense: {
        if (spec.width < 1) throw ConfigError("dense width must be >= 1");
        layer.out_width = spec.width;
        const double limit = std::sqrt(6.0 / static_cast<double>(width));
        layer.weight.resize(n, static_cast<Eigen::Index>(spec.width));
        // Filled row by row so the draw order matches the row-major JSON layout.
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
        }
        layer.bias = Vector::Zero(static_cast<Eigen::Index>(spec.width));
        break;
      }
      case LayerSpec::Kind::BatchNorm:
        layer.scale = Vector::Ones(n);
        layer.shift = Vector::Zero(n);
        layer.running_mean = Vector::Zero(n);
        layer.running_var = Vector::Ones(n);
        break;
      case LayerSpec::Kind::Dropout:
        if (!(spec.rate >= 0.0 && spec.rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
        break;
      case LayerSpec::Kind::Activation:
        break;
    }
    width = layer.out_width;
    layers_.push_back(std::move(layer));
  }
}

Network Network::from_config(const NetworkConfig& config) {
  config.validate();
  return Network(config.input_width, layer_stack(config), config.seed, config.bn_momentum, config.bn_epsilon);
}

std::vector<std::span<double>> Network::parameters() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    if (layer.spec.kind == LayerSpec::Kind::Dense) {
      out.push_back(as_span(layer.weight));
      out.push_back(as_span(layer.bias));
    } else if (layer.spec.kind == LayerSpec::Kind::BatchNorm) {
      out.push_back(as_span(layer.scale));
      out.push_back(as_span(layer.shift));
    }
  }
  return out;
}

std::vector<std::span<const double>> Network::parameters() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers_) {
    if (layer.spec.kind == LayerSpec::Kind::Dense) {
      out.push_back(as_span(layer.weight));
      out.push_back(as_span(layer.bias));
    } else if (layer.spec.kind == LayerSpec::Kind::BatchNorm) {
      out.push_back(as_span(layer.scale));
      out.push_back(as_span(layer.shift));
    }
  }
  return out;
}

std::vector<std::string> Network::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto idx = std::to_string(i);
    if (layers_[i].spec.kind == LayerSpec::Kind::Dense) {
      out.push_back("layer" + idx + ".weight");
      out.push_back("layer" + idx + ".bias");
    } else if (layers_[i].spec.kind == LayerSpec::Kind::BatchNorm) {
      out.push_back("layer" + idx + ".scale");
      out.push_back("layer" + idx + ".shift");
    }
  }
  return out;
}

std::size_t Network::feature_end() const { return layers_.size() - 2; }

std::size_t Network::feature_width() const { return layers_[feature_end()].in_width; }

namespace {
template <typename A>
bool same(const A& a, const A& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}
}  // namespace

bool Network::operator==(const Network& other) const {
  if (input_width_ != other.input_width_ || bn_momentum_ != other.bn_momentum_ || bn_epsilon_ != other.bn_epsilon_ ||
      layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& a = layers_[i];
    const Layer& b = other.layers_[i];
    if (a.spec != b.spec || a.in_width != b.in_width || a.out_width != b.out_width || !same(a.weight, b.weight) ||
        !same(a.bias, b.bias) || !same(a.scale, b.scale) || !same(a.shift, b.shift) ||
        !same(a.running_mean, b.running_mean) || !same(a.running_var, b.running_var)) {
      return false;
    }
  }
  return true;
}

ForwardResult forward(Network& net, const Matrix& batch, Mode mode, Rng* rng) {
  if (mode == Mode::Eval) {
    ForwardResult result;
    const Matrix out = eval_through(net, batch, net.layers().size());
    result.probabilities = out.col(0);
    result.cache.mode = Mode::Eval;
    result.cache.generation = net.generation();
    result.cache.rows = static_cast<std::size_t>(batch.rows());
    result.cache.probabilities = result.probabilities;
    return result;
  }

  if (static_cast<std::size_t>(batch.cols()) != net.input_width()) {
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " does not match network input width " +
                     std::to_string(net.input_width()));
  }
  auto& layers = net.layers();
  ForwardCache cache;
  cache.mode = Mode::Train;
  cache.generation = net.generation();
  cache.rows = static_cast<std::size_t>(batch.rows());
  cache.inputs.resize(layers.size());
  cache.masks.resize(layers.size());
  cache.normalized.resize(layers.size());
  cache.inv_std.resize(layers.size());

  const double n = static_cast<double>(batch.rows());
  Matrix x = batch;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer& layer = layers[i];
    cache.inputs[i] = x;
    switch (layer.spec.kind) {
      case LayerSpec::Kind::Dense: {
        Matrix y = x * layer.weight;
        y.rowwise() += layer.bias.transpose();
        x = std::move(y);
        break;
      }
      case LayerSpec::Kind::BatchNorm: {
        if (batch.rows() < 1) throw ShapeError("batch norm needs at least one row in train mode");
        const Vector mean = x.colwise().mean().transpose();
        Matrix centered = x.rowwise() - mean.transpose();
        const Vector var = centered.colwise().squaredNorm().transpose() / n;
        const Vector inv = (var.array() + net.bn_epsilon()).rsqrt();
        Matrix xhat = centered.array().rowwise() * inv.transpose().array();
        x = (xhat.array().rowwise() * layer.scale.transpose().array()).rowwise() + layer.shift.transpose().array();
        const double m = net.bn_momentum();
        layer.running_mean = m * layer.running_mean + (1.0 - m) * mean;
        layer.running_var = m * layer.running_var + (1.0 - m) * var;
        cache.normalized[i] = std::move(xhat);
        cache.inv_std[i] = inv;
        break;
      }
      case LayerSpec::Kind::Dropout: {
        if (layer.spec.rate == 0.0) break;
        if (rng == nullptr) throw StateError("train-mode dropout needs a random source");
        const double keep = 1.0 - layer.spec.rate;
        Matrix mask(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < mask.rows(); ++r) {
          for (Eigen::Index c = 0; c < mask.cols(); ++c) mask(r, c) = rng->uniform01() < keep ? 1.0 / keep : 0.0;
        }
        x = x.cwiseProduct(mask);
        cache.masks[i] = std::move(mask);
        break;
      }
      case LayerSpec::Kind::Activation:
        if (layer.spec.activation == ActivationKind::Relu) {
          x = x.cwiseMax(0.0);
        } else {
          x = x.unaryExpr([](double v) { return sigmoid(v); });
        }
        break;
    }
  }
  cache.probabilities = x.col(0);
  ForwardResult result;
  result.probabilities = cache.probabilities;
  result.cache = std::move(cache);
  return result;
}

Vector predict(const Network& net, const Matrix& batch) {
  return eval_through(net, batch, net.layers().size()).col(0);
}

Matrix extract_features(const Network& net, const Matrix& batch) { return eval_through(net, batch, net.feature_end()); }

double bce_loss(const Vector& probabilities, const Labels& labels) {
  if (static_cast<std::size_t>(probabilities.size()) != labels.size()) {
    throw ShapeError("probability and label counts differ");
  }
  if (labels.empty()) throw ShapeError("empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[static_cast<Eigen::Index>(i)], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(labels.size());
}

Gradients backward(const Network& net, const ForwardCache& cache, const Labels& labels) {
  if (cache.mode != Mode::Train) throw StateError("backward needs a train-mode forward cache");
  if (cache.generation != net.generation()) throw StateError("forward cache is stale: parameters changed since");
  if (labels.size() != cache.rows) throw StateError("label count does not match the cached batch");
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size()) throw StateError("forward cache belongs to a different network");

  const double n = static_cast<double>(cache.rows);
  // Sigmoid + BCE fuse to (p - y) / n at the output pre-activation.
  Matrix grad(static_cast<Eigen::Index>(cache.rows), 1);
  for (std::size_t i = 0; i < cache.rows; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    grad(r, 0) = (cache.probabilities[r] - labels[i]) / n;
  }

  // Gradients are collected per layer from the back, then reordered.
  std::vector<std::vector<std::vector<double>>> per_layer(layers.size());
  for (std::size_t li = layers.size() - 1; li-- > 0;) {
    const Layer& layer = layers[li];
    const Matrix& input = cache.inputs[li];
    switch (layer.spec.kind) {
      case LayerSpec::Kind::Dense: {
        const Eigen::MatrixXd dw = input.transpose() * grad;
        const Vector db = grad.colwise().sum().transpose();
        per_layer[li].emplace_back(dw.data(), dw.data() + dw.size());
        per_layer[li].emplace_back(db.data(), db.data() + db.size());
        if (li > 0) grad = grad * layer.weight.transpose();
        break;
      }
      case LayerSpec::Kind::BatchNorm: {
        const Matrix& xhat = cache.normalized[li];
        const Vector dscale = grad.cwiseProduct(xhat).colwise().sum().transpose();
        const Vector dshift = grad.colwise().sum().transpose();
        per_layer[li].emplace_back(dscale.data(), dscale.data() + dscale.size());
        per_layer[li].emplace_back(dshift.data(), dshift.data() + dshift.size());
        const Matrix dxhat = grad.array().rowwise() * layer.scale.transpose().array();
        const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dxhat_xhat = dxhat.cwiseProduct(xhat).colwise().sum();
        Matrix centered_grad = (n * dxhat).rowwise() - sum_dxhat;
        centered_grad -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
        grad = (centered_grad.array().rowwise() * (cache.inv_std[li].transpose().array() / n)).matrix();
        break;
      }
      case LayerSpec::Kind::Dropout:
        if (layer.spec.rate > 0.0) grad = grad.cwiseProduct(cache.masks[li]);
        break;
      case LayerSpec::Kind::Activation:
        if (layer.spec.activation == ActivationKind::Relu) {
          grad = (input.array() > 0.0).select(grad, 0.0);
        } else {
          const Matrix s = input.unaryExpr([](double v) { return sigmoid(v); });
          grad = grad.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
        }
        break;
    }
  }

  Gradients out;
  for (auto& tensors : per_layer) {
    for (auto& t : tensors) out.values.push_back(std::move(t));
  }
  return out;
}

void MomentumSgd::step(Network& net, const Gradients& grads) {
  auto params = net.parameters();
  if (grads.values.size() != params.size()) throw ShapeError("gradient count does not match parameter count");
  if (velocity_.empty()) {
    for (const auto& p : params) velocity_.emplace_back(p.size(), 0.0);
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& v = velocity_[t];
    const auto& g = grads.values[t];
    if (g.size() != params[t].size()) throw ShapeError("gradient tensor size mismatch");
    for (std::size_t k = 0; k < g.size(); ++k) {
      v[k] = momentum_ * v[k] - learning_rate_ * g[k];
      params[t][k] += v[k];
    }
  }
  net.mark_updated();
}

TrainHistory train(Network& net, const Matrix& features, const Labels& labels, const NetworkConfig& config,
                   Optimizer* optimizer, const std::optional<ValidationSet>& validation) {
  if (static_cast<std::size_t>(features.cols()) != net.input_width()) {
    throw ShapeError("training matrix width does not match network input width");
  }
  if (static_cast<std::size_t>(features.rows()) != labels.size()) throw ShapeError("row and label counts differ");
  if (labels.empty()) throw ShapeError("empty training set");
  if (config.epochs < 1 || config.batch_size < 1) throw ConfigError("epochs and batch_size must be >= 1");

  MomentumSgd default_optimizer(config.learning_rate, config.momentum);
  Optimizer& opt = optimizer ? *optimizer : default_optimizer;
  Rng rng(Rng::derive_seed(config.seed, 1));

  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::vector<std::size_t> rows(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
      const Matrix batch = take_rows(features, rows);
      const Labels batch_labels = take_labels(labels, rows);

      auto result = forward(net, batch, Mode::Train, &rng);
      const double loss = bce_loss(result.probabilities, batch_labels);
      if (!std::isfinite(loss) || !result.probabilities.allFinite()) {
        throw DivergenceError("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      weighted_loss += loss * static_cast<double>(rows.size());
      opt.step(net, backward(net, result.cache, batch_labels));
    }
    EpochStats stats;
    stats.train_loss = weighted_loss / static_cast<double>(n);
    if (validation) {
      const Vector p = predict(net, validation->features);
      stats.validation_loss = bce_loss(p, validation->labels);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < validation->labels.size(); ++i) {
        correct += static_cast<std::uint8_t>(p[static_cast<Eigen::Index>(i)] >= 0.5) == validation->labels[i];
      }
      stats.validation_accuracy = static_cast<double>(correct) / static_cast<double>(validation->labels.size());
    }
    history.epochs.push_back(stats);
  }
  return history;
}

TrainedNetwork fit_network(const Matrix& features, const Labels& labels, const NetworkConfig& config) {
  NetworkConfig cfg = config;
  cfg.input_width = static_cast<std::size_t>(features.cols());
  Network net = Network::from_config(cfg);
  auto history = train(net, features, labels, cfg);
  return {std::move(net), std::move(history)};
}

std::uint64_t parameter_checksum(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const double* data, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < static_cast<std::size_t>(count) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& layer : net.layers()) {
    mix(layer.weight.data(), layer.weight.size());
    mix(layer.bias.data(), layer.bias.size());
    mix(layer.scale.data(), layer.scale.size());
    mix(layer.shift.data(), layer.shift.size());
    mix(layer.running_mean.data(), layer.running_mean.size());
    mix(layer.running_var.data(), layer.running_var.size());
  }
  return h;
}

nlohmann::json to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    nlohmann::json j = {{"kind", kind_name(layer.spec.kind)}, {"in", layer.in_width}, {"out", layer.out_width}};
    switch (layer.spec.kind) {
      case LayerSpec::Kind::Dense: {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(layer.weight.size()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
        }
        j["weight"] = std::move(w);
        j["bias"] = vector_json(layer.bias);
        break;
      }
      case LayerSpec::Kind::BatchNorm:
        j["scale"] = vector_json(layer.scale);
        j["shift"] = vector_json(layer.shift);
        j["running_mean"] = vector_json(layer.running_mean);
        j["running_var"] = vector_json(layer.running_var);
        break;
      case LayerSpec::Kind::Dropout:
        j["rate"] = layer.spec.rate;
        break;
      case LayerSpec::Kind::Activation:
        j["function"] = layer.spec.activation == ActivationKind::Relu ? "relu" : "sigmoid";
        break;
    }
    layers.push_back(std::move(j));
  }
  return {{"format", "delaycast.network"},
          {"version", 1},
          {"input_width", net.input_width()},
          {"bn_momentum", net.bn_momentum()},
          {"bn_epsilon", net.bn_epsilon()},
          {"layers", std::move(layers)}};
}

Network network_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "delaycast.network") throw DataError("not a delaycast network document");
    if (j.at("version") != 1) throw DataError("unsupported network document version");
    std::vector<LayerSpec> specs;
    for (const auto& l : j.at("layers")) {
      const auto kind = l.at("kind").get<std::string>();
      if (kind == "dense") {
        specs.push_back(LayerSpec::dense(l.at("out").get<std::size_t>()));
      } else if (kind == "batch_norm") {
        specs.push_back(LayerSpec::batch_norm());
      } else if (kind == "dropout") {
        specs.push_back(LayerSpec::dropout(l.at("rate").get<double>()));
      } else if (kind == "activation") {
        specs.push_back(l.at("function") == "relu" ? LayerSpec::relu() : LayerSpec::sigmoid());
      } else {
        throw DataError("unknown layer kind '" + kind + "'");
      }
    }
    Network net(j.at("input_width").get<std::size_t>(), specs, 0, j.at("bn_momentum").get<double>(),
                j.at("bn_epsilon").get<double>());
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = j.at("layers")[i];
      Layer& layer = layers[i];
      if (layer.spec.kind == LayerSpec::Kind::Dense) {
        const auto w = l.at("weight").get<std::vector<double>>();
        if (w.size() != layer.in_width * layer.out_width) throw DataError("network document: weight has wrong size");
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = w[k++];
        }
        layer.bias = vector_from(l.at("bias"), layer.out_width);
      } else if (layer.spec.kind == LayerSpec::Kind::BatchNorm) {
        layer.scale = vector_from(l.at("scale"), layer.out_width);
        layer.shift = vector_from(l.at("shift"), layer.out_width);
        layer.running_mean = vector_from(l.at("running_mean"), layer.out_width);
        layer.running_var = vector_from(l.at("running_var"), layer.out_width);
        if ((layer.running_var.array() <= 0.0).any()) throw DataError("network document: running variance must be > 0");
      }
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed network document: ") + e.what());
  }
}

}  // namespace delaycast::fcnn
