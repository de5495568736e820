#include "ftp/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "ftp/digest.hpp"

namespace ftp::lstm {

using json = nlohmann::ordered_json;
using Row = std::array<double, kAttributeCount>;

Normalizer Normalizer::fit(std::span<const Row> samples) {
  Normalizer n;
  if (samples.empty()) return n;
  const auto count = static_cast<double>(samples.size());
  for (const Row& r : samples) {
    for (int a = 0; a < kAttributeCount; ++a) n.mean[a] += r[a];
  }
  for (double& m : n.mean) m /= count;
  Row var{};
  for (const Row& r : samples) {
    for (int a = 0; a < kAttributeCount; ++a) var[a] += (r[a] - n.mean[a]) * (r[a] - n.mean[a]);
  }
  for (int a = 0; a < kAttributeCount; ++a) {
    const double sd = std::sqrt(var[a] / count);
    n.stddev[a] = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

Row Normalizer::normalize(const Row& x) const {
  Row z{};
  for (int a = 0; a < kAttributeCount; ++a) z[a] = (x[a] - mean[a]) / stddev[a];
  return z;
}

Row Normalizer::denormalize(const Row& z) const {
  Row x{};
  for (int a = 0; a < kAttributeCount; ++a) x[a] = z[a] * stddev[a] + mean[a];
  return x;
}

LstmParams init_params(int hidden_dim, std::uint64_t seed) {
  if (hidden_dim < 1) throw Error("hidden dimension must be >= 1");
  LstmParams p;
  p.weights = Weights<double>::zeros(kAttributeCount, hidden_dim);
  std::mt19937_64 rng(seed);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  std::uniform_real_distribution<double> dist(-k, k);
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  fill(p.weights.w_input);
  fill(p.weights.w_hidden);
  fill(p.weights.w_output);
  return p;
}

Row step_delta(const Waypoint& last, const Waypoint& next) {
  return Row{next.longitude - last.longitude, next.latitude - last.latitude, next.altitude - last.altitude,
             next.velocity - last.velocity, angle_difference(next.heading, last.heading)};
}

Waypoint apply_delta(const Waypoint& last, const Row& delta) {
  Waypoint w = last;
  w.longitude += delta[0];
  w.latitude += delta[1];
  w.altitude += delta[2];
  w.velocity = std::max(0.0, w.velocity + delta[3]);
  w.heading = wrap_degrees(w.heading + delta[4]);
  return w;
}

Mat<double> history_features(std::span<const Waypoint> history) {
  Mat<double> m(static_cast<Eigen::Index>(history.size()), kAttributeCount);
  const Waypoint& last = history.back();
  for (std::size_t t = 0; t < history.size(); ++t) {
    const Row d = step_delta(last, history[t]);
    for (int a = 0; a < kAttributeCount; ++a) m(static_cast<Eigen::Index>(t), a) = d[a];
  }
  return m;
}

Mat<double> normalize_rows(const Mat<double>& raw, const Normalizer& norm) {
  Mat<double> out(raw.rows(), raw.cols());
  for (Eigen::Index t = 0; t < raw.rows(); ++t) {
    for (int a = 0; a < kAttributeCount; ++a) out(t, a) = (raw(t, a) - norm.mean[a]) / norm.stddev[a];
  }
  return out;
}

Vec<double> lstm_forward(const LstmParams& params, const Mat<double>& sequence, Cache<double>* cache) {
  if (!sequence.allFinite()) throw Error("lstm_forward: non-finite input");
  if (sequence.cols() != params.weights.input_dim()) {
    throw Error(fmt::format("lstm_forward: expected {} columns, got {}", params.weights.input_dim(), sequence.cols()));
  }
  return forward(params.weights, sequence, cache);
}

namespace {

struct Sample {
  Mat<double> x;
  Vec<double> y;
};

}  // namespace

TrainReport lstm_train(std::span<const Window> windows, const TrainConfig& cfg,
                       const std::function<void(int, double)>& on_epoch) {
  if (windows.empty()) throw Error("lstm_train: empty training set");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate >= 0.0) || cfg.hidden_dim < 1) {
    throw Error("lstm_train: invalid training config");
  }
  const int horizon = windows.front().horizon();
  std::vector<Mat<double>> raw_x;
  std::vector<Row> raw_y;
  std::vector<Row> feature_rows;
  for (const Window& w : windows) {
    if (w.horizon() != horizon) throw Error("lstm_train: windows mix horizons");
    std::vector<Waypoint> all(w.inputs);
    all.insert(all.end(), w.targets.begin(), w.targets.end());
    for (std::size_t k = 0; k + kInputSteps < all.size(); ++k) {
      std::span<const Waypoint> hist(all.data() + k, kInputSteps);
      raw_x.push_back(history_features(hist));
      raw_y.push_back(step_delta(hist.back(), all[k + kInputSteps]));
      for (Eigen::Index t = 0; t < raw_x.back().rows(); ++t) {
        Row r{};
        for (int a = 0; a < kAttributeCount; ++a) r[a] = raw_x.back()(t, a);
        feature_rows.push_back(r);
      }
    }
  }

  TrainReport report;
  LstmParams& p = report.params;
  p = init_params(cfg.hidden_dim, cfg.seed);
  p.input_norm = Normalizer::fit(feature_rows);
  p.target_norm = Normalizer::fit(raw_y);

  std::vector<Sample> samples;
  samples.reserve(raw_x.size());
  for (std::size_t i = 0; i < raw_x.size(); ++i) {
    const Row z = p.target_norm.normalize(raw_y[i]);
    samples.push_back(Sample{normalize_rows(raw_x[i], p.input_norm), Eigen::Map<const Vec<double>>(z.data(), kAttributeCount)});
  }

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const int hd = cfg.hidden_dim;
  Weights<double> m = Weights<double>::zeros(kAttributeCount, hd);
  Weights<double> v = Weights<double>::zeros(kAttributeCount, hd);
  Weights<double> grad = Weights<double>::zeros(kAttributeCount, hd);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Cache<double> cache;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto batch = static_cast<double>(end - start);
      grad.for_each([](auto& g) { g.setZero(); });
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = samples[order[b]];
        const Vec<double> diff = forward(p.weights, s.x, &cache) - s.y;
        epoch_loss += diff.squaredNorm() / kAttributeCount;
        backward(p.weights, cache, Vec<double>(diff * (2.0 / (kAttributeCount * batch))), grad);
      }
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      auto update = [&](auto& param, auto& g, auto& mm, auto& vv) {
        mm = kBeta1 * mm + (1.0 - kBeta1) * g;
        vv = kBeta2 * vv + (1.0 - kBeta2) * g.cwiseProduct(g);
        param.array() -= cfg.learning_rate * (mm.array() / c1) / ((vv.array() / c2).sqrt() + kEps);
      };
      update(p.weights.w_input, grad.w_input, m.w_input, v.w_input);
      update(p.weights.w_hidden, grad.w_hidden, m.w_hidden, v.w_hidden);
      update(p.weights.bias, grad.bias, m.bias, v.bias);
      update(p.weights.w_output, grad.w_output, m.w_output, v.w_output);
      update(p.weights.b_output, grad.b_output, m.b_output, v.b_output);
    }
    epoch_loss /= static_cast<double>(samples.size());
    if (!std::isfinite(epoch_loss)) throw Error(fmt::format("lstm_train: diverged at epoch {}", epoch));
    report.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return report;
}

std::vector<Waypoint> lstm_predict(const LstmParams& params, const Window& window, int n) {
  std::vector<Waypoint> history(window.inputs.end() - kInputSteps, window.inputs.end());
  std::vector<Waypoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Mat<double> x = normalize_rows(history_features(history), params.input_norm);
    const Vec<double> z = lstm_forward(params, x);
    Row zr{};
    for (int a = 0; a < kAttributeCount; ++a) zr[a] = z(a);
    Waypoint next = apply_delta(history.back(), params.target_norm.denormalize(zr));
    next.timestamp = history.back().timestamp + kStepSeconds;
    next = round_waypoint(next);
    out.push_back(next);
    history.erase(history.begin());
    history.push_back(next);
  }
  return out;
}

namespace {

constexpr std::string_view kFormat = "ftp-lstm";
constexpr int kFormatVersion = 1;

template <typename M>
json row_major(const M& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

template <typename M>
void fill_row_major(M& m, const json& a, std::string_view name) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(m.size())) {
    throw Error(fmt::format("model file: '{}' must hold {} values", name, m.size()));
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = a[k++].get<double>();
  }
}

json norm_json(const Normalizer& n) { return json{{"mean", n.mean}, {"std", n.stddev}}; }

Normalizer norm_from(const json& j) {
  Normalizer n;
  n.mean = j.at("mean").get<Row>();
  n.stddev = j.at("std").get<Row>();
  for (double s : n.stddev) {
    if (!(s > 0.0)) throw Error("model file: normalization std must be positive");
  }
  return n;
}

}  // namespace

void save_params(const LstmParams& params, const std::filesystem::path& path) {
  const auto& w = params.weights;
  json j;
  j["format"] = kFormat;
  j["version"] = kFormatVersion;
  j["input_dim"] = w.input_dim();
  j["hidden_dim"] = w.hidden_dim();
  j["gate_order"] = "input,forget,output,candidate";
  j["weights"] = json{{"w_input", row_major(w.w_input)},   {"w_hidden", row_major(w.w_hidden)},
                      {"bias", row_major(w.bias)},         {"w_output", row_major(w.w_output)},
                      {"b_output", row_major(w.b_output)}};
  j["input_norm"] = norm_json(params.input_norm);
  j["target_norm"] = norm_json(params.target_norm);
  write_file(path, j.dump() + "\n");
}

LstmParams load_params(const std::filesystem::path& path) {
  try {
    const json j = json::parse(read_file(path));
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kFormatVersion) {
      throw Error(fmt::format("'{}' is not an {} v{} model", path.string(), kFormat, kFormatVersion));
    }
    const int d = j.at("input_dim").get<int>();
    const int h = j.at("hidden_dim").get<int>();
    if (d != kAttributeCount || h < 1) throw Error("model file: bad dimensions");
    LstmParams p;
    p.weights = Weights<double>::zeros(d, h);
    const json& w = j.at("weights");
    fill_row_major(p.weights.w_input, w.at("w_input"), "w_input");
    fill_row_major(p.weights.w_hidden, w.at("w_hidden"), "w_hidden");
    fill_row_major(p.weights.bias, w.at("bias"), "bias");
    fill_row_major(p.weights.w_output, w.at("w_output"), "w_output");
    fill_row_major(p.weights.b_output, w.at("b_output"), "b_output");
    bool finite = true;
    p.weights.for_each([&](const auto& m) { finite = finite && m.allFinite(); });
    if (!finite) throw Error("model file: non-finite weights");
    p.input_norm = norm_from(j.at("input_norm"));
    p.target_norm = norm_from(j.at("target_norm"));
    return p;
  } catch (const json::exception& e) {
    throw Error(fmt::format("model file '{}': {}", path.string(), e.what()));
  }
}

}  // namespace ftp::lstm
