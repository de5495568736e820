#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ftp/domain.hpp"

namespace ftp::lstm {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Single-layer LSTM with a linear read-out of the final hidden state.
/// Gate rows are stacked input, forget, output, candidate.
template <typename Scalar>
struct Weights {
  Mat<Scalar> w_input;   // 4H x D
  Mat<Scalar> w_hidden;  // 4H x H
  Vec<Scalar> bias;      // 4H
  Mat<Scalar> w_output;  // D x H
  Vec<Scalar> b_output;  // D

  static Weights zeros(int input_dim, int hidden_dim) {
    Weights w;
    w.w_input = Mat<Scalar>::Zero(4 * hidden_dim, input_dim);
    w.w_hidden = Mat<Scalar>::Zero(4 * hidden_dim, hidden_dim);
    w.bias = Vec<Scalar>::Zero(4 * hidden_dim);
    w.w_output = Mat<Scalar>::Zero(input_dim, hidden_dim);
    w.b_output = Vec<Scalar>::Zero(input_dim);
    return w;
  }

  int input_dim() const { return static_cast<int>(w_input.cols()); }
  int hidden_dim() const { return static_cast<int>(w_hidden.cols()); }

  /// Calls f(tensor) for every parameter tensor in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    f(w_input);
    f(w_hidden);
    f(bias);
    f(w_output);
    f(b_output);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(w_input);
    f(w_hidden);
    f(bias);
    f(w_output);
    f(b_output);
  }

  template <typename Other>
  Weights<Other> cast() const {
    return Weights<Other>{w_input.template cast<Other>(), w_hidden.template cast<Other>(),
                          bias.template cast<Other>(), w_output.template cast<Other>(),
                          b_output.template cast<Other>()};
  }
};

/// Activations kept from a forward pass for backpropagation.
template <typename Scalar>
struct Cache {
  std::vector<Vec<Scalar>> x, i, f, o, g, c, h;  // c[0], h[0] are the zero initial state
};

/// Runs the recurrence over the rows of `seq` (T x D) and returns the
/// D-vector read-out. Fills `cache` when given.
template <typename Scalar>
Vec<Scalar> forward(const Weights<Scalar>& w, const Mat<Scalar>& seq, Cache<Scalar>* cache = nullptr) {
  const int hd = w.hidden_dim();
  Vec<Scalar> h = Vec<Scalar>::Zero(hd);
  Vec<Scalar> c = Vec<Scalar>::Zero(hd);
  if (cache) {
    *cache = Cache<Scalar>{};
    cache->c.push_back(c);
    cache->h.push_back(h);
  }
  auto sigmoid = [](const auto& z) -> Vec<Scalar> {
    return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
  };
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    const Vec<Scalar> x = seq.row(t).transpose();
    const Vec<Scalar> z = w.w_input * x + w.w_hidden * h + w.bias;
    const Vec<Scalar> ig = sigmoid(z.segment(0, hd));
    const Vec<Scalar> fg = sigmoid(z.segment(hd, hd));
    const Vec<Scalar> og = sigmoid(z.segment(2 * hd, hd));
    const Vec<Scalar> gg = z.segment(3 * hd, hd).array().tanh().matrix();
    c = (fg.array() * c.array() + ig.array() * gg.array()).matrix();
    h = (og.array() * c.array().tanh()).matrix();
    if (cache) {
      cache->x.push_back(x);
      cache->i.push_back(ig);
      cache->f.push_back(fg);
      cache->o.push_back(og);
      cache->g.push_back(gg);
      cache->c.push_back(c);
      cache->h.push_back(h);
    }
  }
  return w.w_output * h + w.b_output;
}

/// Accumulates into `grad` the gradient of a loss whose derivative with
/// respect to the read-out is `d_out`.
template <typename Scalar>
void backward(const Weights<Scalar>& w, const Cache<Scalar>& cache, const Vec<Scalar>& d_out,
              Weights<Scalar>& grad) {
  const int hd = w.hidden_dim();
  const std::size_t steps = cache.x.size();
  grad.w_output += d_out * cache.h[steps].transpose();
  grad.b_output += d_out;
  Vec<Scalar> dh = w.w_output.transpose() * d_out;
  Vec<Scalar> dc = Vec<Scalar>::Zero(hd);
  Vec<Scalar> dz(4 * hd);
  for (std::size_t s = steps; s-- > 0;) {
    using Arr = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    const Arr ig = cache.i[s].array();
    const Arr fg = cache.f[s].array();
    const Arr og = cache.o[s].array();
    const Arr gg = cache.g[s].array();
    const Arr tc = cache.c[s + 1].array().tanh();
    dc.array() += dh.array() * og * (Scalar(1) - tc * tc);
    dz.segment(0, hd) = (dc.array() * gg * ig * (Scalar(1) - ig)).matrix();
    dz.segment(hd, hd) = (dc.array() * cache.c[s].array() * fg * (Scalar(1) - fg)).matrix();
    dz.segment(2 * hd, hd) = (dh.array() * tc * og * (Scalar(1) - og)).matrix();
    dz.segment(3 * hd, hd) = (dc.array() * ig * (Scalar(1) - gg * gg)).matrix();
    grad.w_input += dz * cache.x[s].transpose();
    grad.w_hidden += dz * cache.h[s].transpose();
    grad.bias += dz;
    dh = w.w_hidden.transpose() * dz;
    dc = (dc.array() * fg).matrix();
  }
}

/// Per-attribute z-score statistics.
struct Normalizer {
  std::array<double, kAttributeCount> mean{};
  std::array<double, kAttributeCount> stddev{1, 1, 1, 1, 1};

  /// Statistics over the rows of `samples`; a zero spread becomes 1.
  static Normalizer fit(std::span<const std::array<double, kAttributeCount>> samples);

  std::array<double, kAttributeCount> normalize(const std::array<double, kAttributeCount>& x) const;
  std::array<double, kAttributeCount> denormalize(const std::array<double, kAttributeCount>& z) const;
};

struct LstmParams {
  Weights<double> weights;
  /// Statistics of the offset features fed to the network.
  Normalizer input_norm;
  /// Statistics of the one-step deltas the network predicts.
  Normalizer target_norm;

  int hidden_dim() const { return weights.hidden_dim(); }
};

/// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases, identity
/// normalization.
LstmParams init_params(int hidden_dim, std::uint64_t seed);

/// Raw features of a 16-waypoint history: each waypoint minus the last one
/// (heading as a signed angular difference).
Mat<double> history_features(std::span<const Waypoint> history);

/// Change from `last` to `next` in the same representation.
std::array<double, kAttributeCount> step_delta(const Waypoint& last, const Waypoint& next);

/// Applies a delta to `last`, wrapping heading into [0, 360).
Waypoint apply_delta(const Waypoint& last, const std::array<double, kAttributeCount>& delta);

/// Normalizes a raw feature matrix with `norm`.
Mat<double> normalize_rows(const Mat<double>& raw, const Normalizer& norm);

/// Forward pass on a normalized 16x5 sequence. Throws Error on non-finite
/// input.
Vec<double> lstm_forward(const LstmParams& params, const Mat<double>& sequence, Cache<double>* cache = nullptr);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 4;
  double learning_rate = 2e-4;
  std::uint64_t seed = 0;
  int hidden_dim = 32;
};

struct TrainReport {
  LstmParams params;
  /// Mean normalized squared error per epoch.
  std::vector<double> epoch_loss;
};

/// One-step-ahead Adam training (beta1 0.9, beta2 0.999, eps 1e-8).
///
/// Every window contributes one sample per target step: the 16 waypoints
/// preceding that target are the history. Normalization statistics come
/// from the training samples. `on_epoch` is called with (epoch, loss).
///
/// Throws Error on an empty set, mixed horizons, an invalid config or a
/// non-finite loss (naming the epoch).
TrainReport lstm_train(std::span<const Window> windows, const TrainConfig& cfg,
                       const std::function<void(int, double)>& on_epoch = {});

/// Iterative rollout: predict one step, append it to the history, repeat.
/// Outputs are canonically rounded and one minute apart.
std::vector<Waypoint> lstm_predict(const LstmParams& params, const Window& window, int n);

void save_params(const LstmParams& params, const std::filesystem::path& path);
LstmParams load_params(const std::filesystem::path& path);

}  // namespace ftp::lstm
