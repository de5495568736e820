#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "ftp/adsb_ingest.hpp"
#include "ftp/evaluation.hpp"
#include "ftp/lstm.hpp"
#include "ftp/predictors.hpp"
#include "ftp/prompt_codec.hpp"
#include "ftp/synth_gen.hpp"
#include "ftp/windowing.hpp"

using namespace ftp;

namespace {

const std::vector<Trajectory>& minute_trajectories() {
  static const std::vector<Trajectory> trajs = [] {
    std::vector<Trajectory> out;
    const auto corpus = synth::generate_corpus(20, 3);
    for (const Trajectory& t : adsb::clean_trajectories(corpus.records).trajectories) {
      out.push_back(adsb::aggregate_minutes(t));
    }
    return out;
  }();
  return trajs;
}

const std::vector<Window>& windows(int horizon) {
  static std::map<int, std::vector<Window>> cache;
  auto& ws = cache[horizon];
  if (ws.empty()) {
    for (const Trajectory& t : minute_trajectories()) {
      auto part = windowing::sample_windows(t, horizon);
      ws.insert(ws.end(), part.begin(), part.end());
    }
  }
  return ws;
}

void BM_AggregateMinutes(benchmark::State& state) {
  const auto corpus = synth::generate_corpus(1, 5);
  const Trajectory raw = adsb::clean_trajectories(corpus.records).trajectories.front();
  for (auto _ : state) benchmark::DoNotOptimize(adsb::aggregate_minutes(raw));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(raw.waypoints.size()));
}
BENCHMARK(BM_AggregateMinutes);

void BM_SampleWindows(benchmark::State& state) {
  const auto& trajs = minute_trajectories();
  for (auto _ : state) {
    for (const Trajectory& t : trajs) benchmark::DoNotOptimize(windowing::sample_windows(t, 4));
  }
}
BENCHMARK(BM_SampleWindows);

void BM_PromptRoundTrip(benchmark::State& state) {
  const auto& ws = windows(8);
  std::size_t i = 0;
  for (auto _ : state) {
    const Window& w = ws[i++ % ws.size()];
    const auto rec = prompt::build_prompt(w, true);
    benchmark::DoNotOptimize(prompt::parse_completion(rec.assistant, 8, w));
  }
}
BENCHMARK(BM_PromptRoundTrip);

void BM_KinematicPredict(benchmark::State& state) {
  const auto& ws = windows(8);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(predictors::predict_kinematic(ws[i++ % ws.size()], 8));
}
BENCHMARK(BM_KinematicPredict);

void BM_LstmForwardBackward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const auto params = lstm::init_params(hidden, 1);
  const lstm::Mat<double> x = lstm::Mat<double>::Random(kInputSteps, kAttributeCount);
  auto grad = lstm::Weights<double>::zeros(kAttributeCount, hidden);
  lstm::Cache<double> cache;
  for (auto _ : state) {
    const lstm::Vec<double> out = lstm::forward(params.weights, x, &cache);
    lstm::backward(params.weights, cache, out, grad);
    benchmark::DoNotOptimize(grad.w_hidden.data());
  }
}
BENCHMARK(BM_LstmForwardBackward)->Arg(8)->Arg(32)->Arg(64);

void BM_Evaluate(benchmark::State& state) {
  const auto& ws = windows(4);
  std::vector<eval::Sample> samples;
  for (const Window& w : ws) {
    samples.push_back(eval::Sample{w, prompt::ParseOutcome::success(predictors::predict_persistence(w, 4)), 0.1});
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate(samples, eval::EvalOptions{"bench"}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
