#include <gtest/gtest.h>

#include <cmath>

#include "delaycast/error.hpp"
#include "delaycast/fcnn.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace delaycast;
using namespace delaycast::fcnn;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

Network output_only(std::size_t input) { return Network(input, {LayerSpec::dense(1), LayerSpec::sigmoid()}, 1); }

NetworkConfig small_config(std::size_t input) {
  NetworkConfig c;
  c.input_width = input;
  c.hidden_layers = 2;
  c.hidden_units = 8;
  c.epochs = 30;
  c.batch_size = 32;
  c.learning_rate = 0.05;
  c.seed = 17;
  return c;
}

}  // namespace

TEST(Network, DefaultConfigShape) {
  NetworkConfig c;
  EXPECT_EQ(c.hidden_layers, 5u);
  EXPECT_EQ(c.hidden_units, 250u);
  EXPECT_EQ(c.epochs, 75u);
  c.input_width = 37;
  const auto net = Network::from_config(c);
  std::size_t dense = 0;
  for (const auto& layer : net.layers()) {
    if (layer.spec.kind == LayerSpec::Kind::Dense && layer.out_width == 250) ++dense;
  }
  EXPECT_EQ(dense, 5u);
  EXPECT_EQ(net.feature_width(), 250u);
  EXPECT_EQ(net.layers().back().spec, LayerSpec::sigmoid());
}

TEST(Network, RejectsStackWithoutSigmoidOutput) {
  EXPECT_THROW(Network(3, {LayerSpec::dense(4), LayerSpec::relu()}, 1), ConfigError);
  EXPECT_THROW(Network(3, {LayerSpec::dense(2), LayerSpec::sigmoid()}, 1), ConfigError);
  NetworkConfig c;
  c.input_width = 3;
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Network, InitWithinHeBounds) {
  Network net(9, {LayerSpec::dense(20), LayerSpec::relu(), LayerSpec::dense(1), LayerSpec::sigmoid()}, 5);
  const double limit = std::sqrt(6.0 / 9.0);
  EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), limit);
  EXPECT_EQ(net.layers()[0].bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, ZeroWeightsGiveHalf) {
  NetworkConfig c = small_config(4);
  auto net = Network::from_config(c);
  for (auto p : net.parameters()) std::fill(p.begin(), p.end(), 0.0);
  const Vector p = predict(net, random_matrix(5, 4, 1));
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p[i], 0.5);
}

TEST(Forward, EvalBatchNormIsIdentityUpToEpsilon) {
  Network with_bn(3, {LayerSpec::dense(4), LayerSpec::batch_norm(), LayerSpec::dense(1), LayerSpec::sigmoid()}, 8);
  Network without(3, {LayerSpec::dense(4), LayerSpec::dense(1), LayerSpec::sigmoid()}, 8);
  ASSERT_EQ(with_bn.layers()[0].weight, without.layers()[0].weight);
  without.layers()[1].weight = with_bn.layers()[2].weight;
  const Matrix x = random_matrix(6, 3, 2);
  const Vector a = predict(with_bn, x);
  const Vector b = predict(without, x);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Forward, EvalDropoutIsIdentity) {
  Network with(3, {LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dropout(0.5), LayerSpec::dense(1),
                   LayerSpec::sigmoid()},
               4);
  Network without(3, {LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dense(1), LayerSpec::sigmoid()}, 4);
  const Matrix x = random_matrix(7, 3, 3);
  EXPECT_EQ(predict(with, x), predict(without, x));
}

TEST(Forward, WidthMismatchIsShapeError) {
  auto net = Network::from_config(small_config(4));
  Rng rng(1);
  EXPECT_THROW(predict(net, random_matrix(2, 5, 1)), ShapeError);
  EXPECT_THROW(forward(net, random_matrix(2, 3, 1), Mode::Train, &rng), ShapeError);
  EXPECT_THROW(extract_features(net, random_matrix(2, 3, 1)), ShapeError);
}

TEST(Forward, TrainDropoutNeedsRandomSource) {
  auto net = Network::from_config(small_config(4));
  EXPECT_THROW(forward(net, random_matrix(2, 4, 1), Mode::Train), StateError);
}

TEST(Forward, ProbabilitiesBoundedAndLossFiniteForExtremeInputs) {
  auto net = Network::from_config(small_config(3));
  Matrix x = random_matrix(20, 3, 6, 1e6);
  const Vector p = predict(net, x);
  Labels y(20, 1);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    EXPECT_GE(p[i], 0.0);
    EXPECT_LE(p[i], 1.0);
  }
  EXPECT_TRUE(std::isfinite(bce_loss(p, y)));
}

TEST(Loss, Examples) {
  EXPECT_NEAR(bce_loss(Vector::Constant(4, 0.5), {0, 1, 1, 0}), std::log(2.0), 1e-15);
  EXPECT_LE(bce_loss(Vector{{1.0, 0.0, 1.0}}, {1, 0, 1}), -std::log(1.0 - kProbabilityClamp) + 1e-15);
  EXPECT_NEAR(bce_loss(Vector{{0.9, 0.1}}, {1, 0}), 0.105361, 1e-6);
  EXPECT_THROW(bce_loss(Vector{{0.5}}, {1, 0}), ShapeError);
}

TEST(Backward, OutputGradientIsResidualOverBatch) {
  auto net = output_only(3);
  const Matrix x = random_matrix(5, 3, 9);
  const Labels y = {1, 0, 0, 1, 1};
  Rng rng(1);
  const auto pass = forward(net, x, Mode::Train, &rng);
  const auto g = backward(net, pass.cache, y);
  Vector residual(5);
  for (int i = 0; i < 5; ++i) residual[i] = (pass.probabilities[i] - y[static_cast<std::size_t>(i)]) / 5.0;
  EXPECT_NEAR(g.values[1][0], residual.sum(), 1e-15);
  const Vector dw = x.transpose() * residual;
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(g.values[0][static_cast<std::size_t>(j)], dw[j], 1e-15);
}

TEST(Backward, MatchesFiniteDifferencesOnThreeLayerNet) {
  Network net(5,
              {LayerSpec::dense(7), LayerSpec::batch_norm(), LayerSpec::relu(), LayerSpec::dropout(0.3),
               LayerSpec::dense(6), LayerSpec::batch_norm(), LayerSpec::relu(), LayerSpec::dense(4),
               LayerSpec::relu(), LayerSpec::dropout(0.2), LayerSpec::dense(1), LayerSpec::sigmoid()},
              21);
  const Matrix x = random_matrix(8, 5, 22);
  const Labels y = {1, 0, 1, 1, 0, 0, 1, 0};
  const auto check = testsupport::check_gradients(net, x, y, 23);
  EXPECT_GT(check.checked, 100u);
  EXPECT_LT(check.max_relative_error, 1e-4) << check.worst;
}

TEST(Backward, RandomSmallNetsMatchFiniteDifferences) {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    auto c = testsupport::random_small_network(rng);
    const auto check = testsupport::check_gradients(c.net, c.x, c.y, rng.next());
    EXPECT_LT(check.max_relative_error, 1e-4) << "trial " << trial << " worst " << check.worst;
  }
}

TEST(Backward, ZeroGradientAtPerfectPrediction) {
  auto net = output_only(1);
  net.layers()[0].weight(0, 0) = 100.0;
  const Matrix x{{1.0}, {-1.0}};
  Rng rng(1);
  const auto pass = forward(net, x, Mode::Train, &rng);
  const auto g = backward(net, pass.cache, {1, 0});
  for (const auto& t : g.values) {
    for (double v : t) EXPECT_LT(std::abs(v), 1e-30);
  }
}

TEST(Backward, StaleCachesRejected) {
  auto net = Network::from_config(small_config(3));
  const Matrix x = random_matrix(4, 3, 1);
  const Labels y = {1, 0, 1, 0};
  Rng rng(2);
  const auto eval = forward(net, x, Mode::Eval);
  EXPECT_THROW(backward(net, eval.cache, y), StateError);
  const auto pass = forward(net, x, Mode::Train, &rng);
  EXPECT_THROW(backward(net, pass.cache, {1, 0}), StateError);
  MomentumSgd opt(0.1, 0.9);
  opt.step(net, backward(net, pass.cache, y));
  EXPECT_THROW(backward(net, pass.cache, y), StateError);
}

TEST(Properties, DropoutExpectationMatchesEval) {
  Network net(4, {LayerSpec::dense(6), LayerSpec::relu(), LayerSpec::dropout(0.4), LayerSpec::dense(1),
                  LayerSpec::sigmoid()},
              12);
  const Matrix x = random_matrix(1, 4, 13);
  Rng rng(14);
  Matrix sum = Matrix::Zero(1, 6);
  Matrix unmasked;
  for (int i = 0; i < 10000; ++i) {
    const auto pass = forward(net, x, Mode::Train, &rng);
    sum += pass.cache.inputs[3];  // output of the dropout layer
    unmasked = pass.cache.inputs[2];
  }
  const Matrix mean = sum / 10000.0;
  for (Eigen::Index c = 0; c < 6; ++c) {
    if (unmasked(0, c) == 0.0) {
      EXPECT_EQ(mean(0, c), 0.0);
    } else {
      EXPECT_NEAR(mean(0, c) / unmasked(0, c), 1.0, 0.02) << c;
    }
  }
}

TEST(Properties, BatchNormTrainStatistics) {
  Network net(3, {LayerSpec::dense(5), LayerSpec::batch_norm(), LayerSpec::dense(1), LayerSpec::sigmoid()}, 31);
  for (Eigen::Index i = 0; i < 5; ++i) {
    net.layers()[1].scale[i] = 0.5 + static_cast<double>(i);
    net.layers()[1].shift[i] = -1.0 + 0.3 * static_cast<double>(i);
  }
  const Matrix x = random_matrix(64, 3, 32, 50.0);
  Rng rng(1);
  const auto pass = forward(net, x, Mode::Train, &rng);
  const Matrix& xhat = pass.cache.normalized[1];
  const Matrix& out = pass.cache.inputs[2];
  for (Eigen::Index c = 0; c < 5; ++c) {
    const double m = xhat.col(c).mean();
    const double sd = std::sqrt((xhat.col(c).array() - m).square().mean());
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(sd, 1.0, 1e-6);
    const double om = out.col(c).mean();
    EXPECT_NEAR(om, net.layers()[1].shift[c], 1e-6);
    EXPECT_NEAR(std::sqrt((out.col(c).array() - om).square().mean()), net.layers()[1].scale[c], 1e-6);
  }
  // running statistics moved towards the batch statistics
  EXPECT_GT(net.layers()[1].running_var.minCoeff(), 0.0);
  EXPECT_NE(net.layers()[1].running_mean, Vector::Zero(5));
}

TEST(Train, LossDecreasesOnSeparableData) {
  const auto d = testsupport::linearly_separable(200, 3);
  auto c = small_config(2);
  auto net = Network::from_config(c);
  const auto history = train(net, d.x, d.y, c);
  ASSERT_EQ(history.epochs.size(), c.epochs);
  EXPECT_LT(history.epochs.back().train_loss, history.epochs.front().train_loss);
}

TEST(Train, BitwiseDeterministic) {
  const auto d = testsupport::blobs(150, 3, 1.0, 4);
  auto c = small_config(3);
  c.epochs = 5;
  const auto a = fit_network(d.x, d.y, c);
  const auto b = fit_network(d.x, d.y, c);
  EXPECT_TRUE(a.network == b.network);
  EXPECT_EQ(parameter_checksum(a.network), parameter_checksum(b.network));
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    EXPECT_EQ(a.history.epochs[e].train_loss, b.history.epochs[e].train_loss);
  }
  c.seed = 18;
  EXPECT_NE(parameter_checksum(fit_network(d.x, d.y, c).network), parameter_checksum(a.network));
}

TEST(Train, ValidationHistoryRecorded) {
  const auto d = testsupport::blobs(100, 2, 0.5, 5);
  auto c = small_config(2);
  c.epochs = 3;
  auto net = Network::from_config(c);
  const auto h = train(net, d.x, d.y, c, nullptr, ValidationSet{d.x, d.y});
  ASSERT_EQ(h.epochs.size(), 3u);
  ASSERT_TRUE(h.epochs[2].validation_accuracy.has_value());
  EXPECT_GT(*h.epochs[2].validation_accuracy, 0.9);
}

TEST(Train, NonFiniteLossNamesEpoch) {
  auto d = testsupport::blobs(40, 2, 1.0, 6);
  d.x(3, 1) = std::nan("");
  auto c = small_config(2);
  auto net = Network::from_config(c);
  try {
    train(net, d.x, d.y, c);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Features, WidthDeterminismAndTruncation) {
  NetworkConfig c;
  c.input_width = 6;
  c.hidden_layers = 2;
  c.seed = 3;
  auto net = Network::from_config(c);
  const Matrix x = random_matrix(9, 6, 8);
  const Matrix f = extract_features(net, x);
  EXPECT_EQ(f.cols(), 250);
  EXPECT_EQ(f, extract_features(net, x));
  const auto& out = net.layers()[net.feature_end()];
  Vector z = f * out.weight;
  z.array() += out.bias[0];
  const Vector p = predict(net, x);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], 1.0 / (1.0 + std::exp(-z[i])), 1e-14);
}

TEST(Persist, NetworkJsonRoundTrip) {
  const auto d = testsupport::blobs(60, 3, 1.0, 7);
  auto c = small_config(3);
  c.epochs = 2;
  const auto trained = fit_network(d.x, d.y, c);
  const auto back = network_from_json(nlohmann::json::parse(to_json(trained.network).dump()));
  EXPECT_TRUE(back == trained.network);
  EXPECT_EQ(predict(back, d.x), predict(trained.network, d.x));
  auto broken = to_json(trained.network);
  broken["version"] = 99;
  EXPECT_ANY_THROW(network_from_json(broken));
}
