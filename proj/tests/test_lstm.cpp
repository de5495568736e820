#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ftp/digest.hpp"
#include "ftp/lstm.hpp"
#include "support.hpp"

using namespace ftp;
using namespace ftp::lstm;

namespace {

using LD = long double;

Weights<LD> random_weights(int d, int h, std::uint64_t seed) {
  fixtures::Rng rng(seed);
  Weights<LD> w = Weights<LD>::zeros(d, h);
  w.for_each([&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<LD>(fixtures::uniform(rng, -0.8, 0.8));
  });
  return w;
}

LD loss(const Weights<LD>& w, const Mat<LD>& x, const Vec<LD>& y) {
  return LD(0.5) * (forward(w, x) - y).squaredNorm();
}

std::vector<Window> constant_windows(int count) {
  std::vector<Window> ws;
  for (int i = 0; i < count; ++i) {
    Window w;
    w.callsign = "K";
    for (int k = 0; k < kInputSteps + 1; ++k) {
      Waypoint p{60 * (k + 100 * i), 110.0, 25.0, 9000.0, 800.0, 45.0};
      (k < kInputSteps ? w.inputs : w.targets).push_back(p);
    }
    ws.push_back(w);
  }
  return ws;
}

std::vector<Window> random_windows(int count, int horizon, std::uint64_t seed) {
  fixtures::Rng rng(seed);
  std::vector<Window> ws;
  for (int i = 0; i < count; ++i) ws.push_back(fixtures::random_window(rng, horizon));
  return ws;
}

}  // namespace

TEST(LstmForward, ZeroWeightsReturnOutputBias) {
  Weights<double> w = Weights<double>::zeros(5, 8);
  w.b_output << 1, -2, 3, -4, 5;
  Mat<double> seq = Mat<double>::Random(16, 5);
  EXPECT_EQ(forward(w, seq), w.b_output);
}

TEST(LstmForward, DeterministicAndRejectsNonFinite) {
  const LstmParams p = init_params(8, 3);
  Mat<double> seq = Mat<double>::Constant(16, 5, 0.25);
  EXPECT_EQ(lstm_forward(p, seq), lstm_forward(p, seq));
  EXPECT_EQ(init_params(8, 3).weights.w_input, p.weights.w_input);
  seq(3, 2) = std::nan("");
  EXPECT_THROW(lstm_forward(p, seq), Error);
}

TEST(LstmBackward, MatchesCentralDifferences) {
  constexpr int kD = 5;
  constexpr int kH = 4;
  Weights<LD> w = random_weights(kD, kH, 7);
  fixtures::Rng rng(8);
  Mat<LD> x(6, kD);
  Vec<LD> y(kD);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<LD>(fixtures::uniform(rng, -1.5, 1.5));
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = static_cast<LD>(fixtures::uniform(rng, -1, 1));

  Cache<LD> cache;
  const Vec<LD> out = forward(w, x, &cache);
  Weights<LD> grad = Weights<LD>::zeros(kD, kH);
  backward(w, cache, Vec<LD>(out - y), grad);

  const LD eps = 1e-5L;
  std::vector<LD*> params;
  std::vector<LD> analytic;
  w.for_each([&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) params.push_back(m.data() + i);
  });
  grad.for_each([&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) analytic.push_back(m.data()[i]);
  });
  ASSERT_EQ(params.size(), analytic.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const LD saved = *params[k];
    *params[k] = saved + eps;
    const LD up = loss(w, x, y);
    *params[k] = saved - eps;
    const LD down = loss(w, x, y);
    *params[k] = saved;
    const LD numeric = (up - down) / (2 * eps);
    const LD scale = std::max(std::fabs(numeric) + std::fabs(analytic[k]), LD(1e-8));
    EXPECT_LT(static_cast<double>(std::fabs(numeric - analytic[k]) / scale), 1e-4) << "parameter " << k;
  }
}

TEST(LstmTrain, ConstantTrajectoryConverges) {
  const auto ws = constant_windows(20);
  TrainConfig cfg;
  cfg.hidden_dim = 8;
  cfg.epochs = 50;
  cfg.learning_rate = 1e-3;
  const auto r = lstm_train(ws, cfg);
  ASSERT_EQ(r.epoch_loss.size(), 50u);
  EXPECT_LT(r.epoch_loss.back(), 1e-6);
  const auto pred = lstm_predict(r.params, ws[0], 1);
  EXPECT_NEAR(pred[0].longitude, 110.0, 1e-5);
  EXPECT_NEAR(pred[0].altitude, 9000.0, 1e-3);
}

TEST(LstmTrain, LossDecreasesOnDriftingWindows) {
  const auto ws = random_windows(40, 4, 12);
  TrainConfig cfg;
  cfg.hidden_dim = 8;
  cfg.epochs = 15;
  cfg.learning_rate = 3e-3;
  const auto r = lstm_train(ws, cfg);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST(LstmTrain, ZeroLearningRateLeavesParametersAtInit) {
  const auto ws = random_windows(10, 1, 4);
  TrainConfig cfg;
  cfg.hidden_dim = 6;
  cfg.epochs = 2;
  cfg.learning_rate = 0.0;
  cfg.seed = 9;
  const auto r = lstm_train(ws, cfg);
  const auto init = init_params(6, 9);
  EXPECT_EQ(r.params.weights.w_input, init.weights.w_input);
  EXPECT_EQ(r.params.weights.w_hidden, init.weights.w_hidden);
  EXPECT_EQ(r.params.weights.bias, init.weights.bias);
  EXPECT_EQ(r.params.weights.w_output, init.weights.w_output);
  EXPECT_EQ(r.params.weights.b_output, init.weights.b_output);
}

TEST(LstmTrain, SameSeedSameModel) {
  const auto ws = random_windows(12, 1, 5);
  TrainConfig cfg;
  cfg.hidden_dim = 6;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-3;
  const auto a = lstm_train(ws, cfg);
  const auto b = lstm_train(ws, cfg);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(a.params.weights.w_hidden, b.params.weights.w_hidden);
}

TEST(LstmTrain, InvalidInputsThrow) {
  TrainConfig cfg;
  EXPECT_THROW(lstm_train(std::span<const Window>{}, cfg), Error);
  auto mixed = random_windows(1, 1, 1);
  mixed.push_back(random_windows(1, 4, 2)[0]);
  EXPECT_THROW(lstm_train(mixed, cfg), Error);
  cfg.epochs = 0;
  EXPECT_THROW(lstm_train(random_windows(2, 1, 3), cfg), Error);
}

TEST(LstmPredict, RolloutLengthTimingAndRounding) {
  const auto ws = random_windows(10, 8, 6);
  TrainConfig cfg;
  cfg.hidden_dim = 6;
  cfg.epochs = 2;
  const auto r = lstm_train(ws, cfg);
  for (int n : {1, 4, 8}) {
    const auto out = lstm_predict(r.params, ws[0], n);
    ASSERT_EQ(out.size(), static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      EXPECT_EQ(out[static_cast<std::size_t>(k)].timestamp, ws[0].last_input().timestamp + 60 * (k + 1));
      EXPECT_EQ(round_waypoint(out[static_cast<std::size_t>(k)]), out[static_cast<std::size_t>(k)]);
    }
  }
  EXPECT_EQ(lstm_predict(r.params, ws[0], 4)[0], lstm_predict(r.params, ws[0], 1)[0]);
}

TEST(LstmParams, SaveLoadRoundTrip) {
  const auto r = lstm_train(random_windows(8, 1, 7), TrainConfig{2, 4, 1e-3, 1, 5});
  const auto path = std::filesystem::temp_directory_path() / "ftp_lstm_roundtrip.json";
  save_params(r.params, path);
  const LstmParams back = load_params(path);
  EXPECT_EQ(back.weights.w_input, r.params.weights.w_input);
  EXPECT_EQ(back.weights.w_output, r.params.weights.w_output);
  EXPECT_EQ(back.input_norm.mean, r.params.input_norm.mean);
  EXPECT_EQ(back.target_norm.stddev, r.params.target_norm.stddev);
  write_file(path, "{\"format\":\"other\"}");
  EXPECT_THROW(load_params(path), Error);
}

TEST(Normalizer, RoundTripAndZeroSpread) {
  const std::vector<std::array<double, 5>> rows{{1, 2, 3, 4, 5}, {3, 2, 7, 0, -5}};
  const auto n = Normalizer::fit(rows);
  EXPECT_EQ(n.stddev[1], 1.0);
  for (const auto& r : rows) {
    const auto back = n.denormalize(n.normalize(r));
    for (int a = 0; a < 5; ++a) EXPECT_NEAR(back[a], r[a], 1e-12);
  }
}

TEST(Features, DeltaApplyInverts) {
  const Waypoint a{0, 100, 30, 9000, 800, 350};
  const Waypoint b{60, 100.1, 30.05, 9100, 805, 10};
  const auto d = step_delta(a, b);
  EXPECT_NEAR(d[4], 20.0, 1e-12);
  const Waypoint c = apply_delta(a, d);
  EXPECT_NEAR(c.longitude, b.longitude, 1e-12);
  EXPECT_NEAR(c.heading, b.heading, 1e-9);
}
