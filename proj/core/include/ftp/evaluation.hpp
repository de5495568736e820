#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ftp/domain.hpp"
#include "ftp/prompt_codec.hpp"

namespace ftp::eval {

/// Mean absolute error. Throws Error on empty or mismatched input.
double mae(std::span<const double> truth, std::span<const double> pred);
/// Root mean squared error. Throws Error on empty or mismatched input.
double rmse(std::span<const double> truth, std::span<const double> pred);
/// Arithmetic mean of per-sample latencies. Throws Error on empty input.
double mean_latency(std::span<const double> latencies);

/// Mean vertical rate (m/s) over the inputs beyond which a window counts as
/// climbing or descending.
inline constexpr double kPhaseRateThreshold = 2.5;

/// TakeOff above +2.5 m/s mean input climb rate, Landing below -2.5 m/s,
/// Cruise otherwise.
PhaseLabel segment_phase(const Window& window);

/// Running sums for pooled error metrics; merging is exact.
struct ErrorAccumulator {
  std::size_t count = 0;
  double sum_abs = 0.0;
  double sum_sq = 0.0;

  void add(double error) {
    ++count;
    sum_abs += std::abs(error);
    sum_sq += error * error;
  }
  void merge(const ErrorAccumulator& o) {
    count += o.count;
    sum_abs += o.sum_abs;
    sum_sq += o.sum_sq;
  }
  double mae() const { return sum_abs / static_cast<double>(count); }
  double rmse() const { return std::sqrt(sum_sq / static_cast<double>(count)); }

  friend bool operator==(const ErrorAccumulator&, const ErrorAccumulator&) = default;
};

/// Per-attribute pooled errors over a set of (truth, prediction) pairs.
struct MetricBlock {
  std::array<ErrorAccumulator, kAttributeCount> attributes{};

  bool available() const { return attributes[0].count > 0; }
  const ErrorAccumulator& operator[](Attribute a) const { return attributes[static_cast<std::size_t>(a)]; }
  /// Adds one predicted waypoint against its truth; heading errors use the
  /// shortest angular difference.
  void add(const Waypoint& truth, const Waypoint& pred);
  void merge(const MetricBlock& o);

  friend bool operator==(const MetricBlock&, const MetricBlock&) = default;
};

struct SampleCounts {
  std::size_t total = 0;
  std::size_t evaluated = 0;
  std::size_t excluded_severe = 0;
  std::size_t failed_missing = 0;
  std::size_t failed_format = 0;

  friend bool operator==(const SampleCounts&, const SampleCounts&) = default;
};

struct PhaseReport {
  SampleCounts counts;
  MetricBlock metrics;

  friend bool operator==(const PhaseReport&, const PhaseReport&) = default;
};

struct MetricsReport {
  std::string model;
  std::string template_version;
  int horizon = 0;
  SampleCounts counts;
  MetricBlock overall;
  /// Pooled over the samples whose window carries that phase.
  std::map<PhaseLabel, PhaseReport> phases;
  /// overall split by prediction step (index 0 = first step).
  std::vector<MetricBlock> per_step;
  /// Latency over all submitted samples; absent when latency is suppressed.
  std::optional<double> latency_sum;

  std::optional<double> mean_latency() const {
    if (!latency_sum || counts.total == 0) return std::nullopt;
    return *latency_sum / static_cast<double>(counts.total);
  }

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct Sample {
  Window window;
  prompt::ParseOutcome outcome;
  double latency_seconds = 0.0;
};

struct EvalOptions {
  std::string model;
  std::string template_version{prompt::kTemplateVersion};
  /// Drop latency from the report (for byte-stable outputs).
  bool include_latency = true;
};

/// Scores parsed predictions against their windows' targets.
///
/// Failures are counted per class and left out of MAE/RMSE; successful
/// predictions are pooled over every step and sample. Windows without a
/// phase are labelled with segment_phase. Latency averages every sample,
/// failures included. Throws Error if samples mix horizons.
MetricsReport evaluate(std::span<const Sample> samples, const EvalOptions& opts);

/// Combines reports over disjoint sample sets. Throws Error if horizons
/// differ.
MetricsReport merge(const MetricsReport& a, const MetricsReport& b);

/// round(proportion * n) distinct indices drawn uniformly with a seeded
/// generator, in ascending order. proportion 1 returns every index.
/// Throws Error when proportion is outside (0, 1] or rounds to no items.
std::vector<std::size_t> few_shot_indices(std::size_t n, double proportion, std::uint64_t seed);

template <typename T>
std::vector<T> few_shot_split(std::span<const T> dataset, double proportion, std::uint64_t seed) {
  std::vector<T> out;
  for (std::size_t i : few_shot_indices(dataset.size(), proportion, seed)) out.push_back(dataset[i]);
  return out;
}

enum class ReportFormat { Table, Csv, Json };

std::optional<ReportFormat> parse_report_format(std::string_view s);

/// Renders a report. Throws std::logic_error if any attribute has
/// RMSE < MAE, which pooled sums cannot produce.
std::string emit_report(const MetricsReport& report, ReportFormat format);

/// Inverse of the JSON format.
MetricsReport report_from_json(std::string_view text);

/// Header of the CSV format.
inline constexpr std::string_view kCsvHeader = "model,horizon,phase,step,attribute,metric,value";

struct CsvRow {
  std::string model;
  int horizon = 0;
  std::string phase;
  std::string step;
  std::string attribute;
  std::string metric;
  double value = 0.0;
};

/// Parses the CSV format back into rows. Throws Error on a bad header.
std::vector<CsvRow> parse_report_csv(std::string_view text);

}  // namespace ftp::eval
