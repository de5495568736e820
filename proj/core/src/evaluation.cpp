#include "ftp/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "ftp/adsb_ingest.hpp"

namespace ftp::eval {

namespace {

void check_pairs(std::span<const double> truth, std::span<const double> pred) {
  if (truth.empty()) throw Error("metric over an empty list");
  if (truth.size() != pred.size()) {
    throw Error(fmt::format("metric length mismatch: {} truth vs {} predicted", truth.size(), pred.size()));
  }
}

}  // namespace

double mae(std::span<const double> truth, std::span<const double> pred) {
  check_pairs(truth, pred);
  ErrorAccumulator acc;
  for (std::size_t i = 0; i < truth.size(); ++i) acc.add(truth[i] - pred[i]);
  return acc.mae();
}

double rmse(std::span<const double> truth, std::span<const double> pred) {
  check_pairs(truth, pred);
  ErrorAccumulator acc;
  for (std::size_t i = 0; i < truth.size(); ++i) acc.add(truth[i] - pred[i]);
  return acc.rmse();
}

double mean_latency(std::span<const double> latencies) {
  if (latencies.empty()) throw Error("mean latency over an empty list");
  return std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
}

PhaseLabel segment_phase(const Window& window) {
  if (window.inputs.empty()) return PhaseLabel::Cruise;
  const double span_seconds = static_cast<double>((kInputSteps - 1) * kStepSeconds);
  const double rate = (window.inputs.back().altitude - window.inputs.front().altitude) / span_seconds;
  if (rate > kPhaseRateThreshold) return PhaseLabel::TakeOff;
  if (rate < -kPhaseRateThreshold) return PhaseLabel::Landing;
  return PhaseLabel::Cruise;
}

void MetricBlock::add(const Waypoint& truth, const Waypoint& pred) {
  for (Attribute a : kAttributes) {
    const double t = attribute_value(truth, a);
    const double p = attribute_value(pred, a);
    const double err = a == Attribute::Heading ? angle_difference(p, t) : p - t;
    attributes[static_cast<std::size_t>(a)].add(err);
  }
}

void MetricBlock::merge(const MetricBlock& o) {
  for (std::size_t i = 0; i < attributes.size(); ++i) attributes[i].merge(o.attributes[i]);
}

namespace {

void merge_counts(SampleCounts& into, const SampleCounts& c) {
  into.total += c.total;
  into.evaluated += c.evaluated;
  into.excluded_severe += c.excluded_severe;
  into.failed_missing += c.failed_missing;
  into.failed_format += c.failed_format;
}

void count_outcome(SampleCounts& c, const prompt::ParseOutcome& outcome) {
  ++c.total;
  if (outcome.ok()) {
    ++c.evaluated;
    return;
  }
  switch (outcome.failure().kind) {
    case prompt::FailureKind::MissingTrajectory: ++c.failed_missing; break;
    case prompt::FailureKind::UnexpectedFormat: ++c.failed_format; break;
    case prompt::FailureKind::SevereDeviation: ++c.excluded_severe; break;
  }
}

}  // namespace

MetricsReport evaluate(std::span<const Sample> samples, const EvalOptions& opts) {
  MetricsReport r;
  r.model = opts.model;
  r.template_version = opts.template_version;
  if (!samples.empty()) r.horizon = samples.front().window.horizon();
  r.per_step.resize(static_cast<std::size_t>(r.horizon));
  if (opts.include_latency) r.latency_sum = 0.0;

  for (const Sample& s : samples) {
    if (s.window.horizon() != r.horizon) {
      throw Error(fmt::format("samples mix horizons {} and {}", r.horizon, s.window.horizon()));
    }
    const PhaseLabel phase = s.window.phase.value_or(segment_phase(s.window));
    PhaseReport& pr = r.phases[phase];
    count_outcome(r.counts, s.outcome);
    count_outcome(pr.counts, s.outcome);
    if (r.latency_sum) *r.latency_sum += s.latency_seconds;
    if (!s.outcome.ok()) continue;

    const auto& pred = s.outcome.waypoints();
    if (pred.size() != s.window.targets.size()) {
      throw Error(fmt::format("prediction has {} waypoints for horizon {}", pred.size(), r.horizon));
    }
    for (std::size_t k = 0; k < pred.size(); ++k) {
      r.overall.add(s.window.targets[k], pred[k]);
      pr.metrics.add(s.window.targets[k], pred[k]);
      r.per_step[k].add(s.window.targets[k], pred[k]);
    }
  }
  return r;
}

MetricsReport merge(const MetricsReport& a, const MetricsReport& b) {
  if (a.counts.total == 0) return b;
  if (b.counts.total == 0) return a;
  if (a.horizon != b.horizon) throw Error(fmt::format("cannot merge horizons {} and {}", a.horizon, b.horizon));
  MetricsReport r = a;
  merge_counts(r.counts, b.counts);
  r.overall.merge(b.overall);
  for (const auto& [phase, pr] : b.phases) {
    PhaseReport& into = r.phases[phase];
    merge_counts(into.counts, pr.counts);
    into.metrics.merge(pr.metrics);
  }
  for (std::size_t k = 0; k < r.per_step.size(); ++k) r.per_step[k].merge(b.per_step[k]);
  if (r.latency_sum && b.latency_sum) {
    *r.latency_sum += *b.latency_sum;
  } else {
    r.latency_sum.reset();
  }
  return r;
}

std::vector<std::size_t> few_shot_indices(std::size_t n, double proportion, std::uint64_t seed) {
  if (!(proportion > 0.0 && proportion <= 1.0)) {
    throw Error(fmt::format("few-shot proportion {} is outside (0, 1]", proportion));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (proportion == 1.0) {
    if (n == 0) throw Error("few-shot split too small: empty dataset");
    return idx;
  }
  const auto k = static_cast<std::size_t>(std::llround(proportion * static_cast<double>(n)));
  if (k == 0) throw Error(fmt::format("few-shot split too small: {} of {} rounds to 0 items", proportion, n));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::optional<ReportFormat> parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::Table;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  return std::nullopt;
}

namespace {

using json = nlohmann::ordered_json;

void check_block(const MetricBlock& b) {
  if (!b.available()) return;
  for (Attribute a : kAttributes) {
    const double m = b[a].mae();
    const double r = b[a].rmse();
    if (!(m >= 0.0) || r < m * (1.0 - 1e-12)) {
      throw std::logic_error(fmt::format("{}: RMSE {} below MAE {}", to_string(a), r, m));
    }
  }
}

void check_report(const MetricsReport& r) {
  check_block(r.overall);
  for (const auto& [p, pr] : r.phases) check_block(pr.metrics);
  for (const auto& b : r.per_step) check_block(b);
}

std::string unit(Attribute a) {
  switch (a) {
    case Attribute::Altitude: return "m";
    case Attribute::Velocity: return "km/h";
    default: return "deg";
  }
}

std::string cell(const MetricBlock& b, Attribute a, bool rmse) {
  if (!b.available()) return "n/a";
  return fmt::format("{:.4f}", rmse ? b[a].rmse() : b[a].mae());
}

void table_rows(std::ostringstream& os, const MetricsReport& r, std::span<const Attribute> attrs) {
  os << fmt::format("{:<8}", "phase");
  for (bool rmse : {false, true}) {
    for (Attribute a : attrs) {
      os << fmt::format(" | {:>14}", fmt::format("{} {} ({})", rmse ? "RMSE" : "MAE", to_string(a).substr(0, 3),
                                                 unit(a)));
    }
  }
  os << " | " << fmt::format("{:>5}", "n") << '\n';
  auto row = [&](std::string_view name, const MetricBlock& b, std::size_t n) {
    os << fmt::format("{:<8}", name);
    for (bool rmse : {false, true}) {
      for (Attribute a : attrs) os << fmt::format(" | {:>14}", cell(b, a, rmse));
    }
    os << " | " << fmt::format("{:>5}", n) << '\n';
  };
  row("entire", r.overall, r.counts.evaluated);
  for (PhaseLabel p : kPhases) {
    const auto it = r.phases.find(p);
    if (it != r.phases.end()) row(to_string(p), it->second.metrics, it->second.counts.evaluated);
  }
}

std::string emit_table(const MetricsReport& r) {
  std::ostringstream os;
  os << fmt::format("model: {}  horizon: {}  template: {}\n", r.model, r.horizon, r.template_version);
  os << fmt::format("samples: {} total, {} evaluated, {} excluded (severe deviation), {} failed (missing), "
                    "{} failed (format)\n",
                    r.counts.total, r.counts.evaluated, r.counts.excluded_severe, r.counts.failed_missing,
                    r.counts.failed_format);
  if (const auto lat = r.mean_latency()) os << fmt::format("mean inference latency: {:.4f} s\n", *lat);
  os << '\n';
  const Attribute headline[] = {Attribute::Longitude, Attribute::Latitude, Attribute::Altitude};
  table_rows(os, r, headline);
  os << "\nextended\n";
  const Attribute extended[] = {Attribute::Velocity, Attribute::Heading};
  table_rows(os, r, extended);
  if (r.horizon > 1 && r.overall.available()) {
    os << "\nper step MAE\n";
    os << fmt::format("{:<8}", "step");
    for (Attribute a : kAttributes) os << fmt::format(" | {:>12}", to_string(a));
    os << '\n';
    for (std::size_t k = 0; k < r.per_step.size(); ++k) {
      os << fmt::format("{:<8}", k + 1);
      for (Attribute a : kAttributes) os << fmt::format(" | {:>12}", cell(r.per_step[k], a, false));
      os << '\n';
    }
  }
  return os.str();
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string emit_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  const std::string prefix = fmt::format("{},{},", csv_field(r.model), r.horizon);
  auto line = [&](std::string_view phase, std::string_view step, std::string_view attr, std::string_view metric,
                  double v) { os << prefix << phase << ',' << step << ',' << attr << ',' << metric << ',' << number(v)
                                 << '\n'; };
  auto counts = [&](std::string_view phase, const SampleCounts& c) {
    line(phase, "all", "samples", "total", static_cast<double>(c.total));
    line(phase, "all", "samples", "evaluated", static_cast<double>(c.evaluated));
    line(phase, "all", "samples", "excluded_severe", static_cast<double>(c.excluded_severe));
    line(phase, "all", "samples", "failed_missing", static_cast<double>(c.failed_missing));
    line(phase, "all", "samples", "failed_format", static_cast<double>(c.failed_format));
  };
  auto block = [&](std::string_view phase, std::string_view step, const MetricBlock& b) {
    if (!b.available()) return;
    for (Attribute a : kAttributes) {
      line(phase, step, to_string(a), "mae", b[a].mae());
      line(phase, step, to_string(a), "rmse", b[a].rmse());
    }
  };
  counts("entire", r.counts);
  if (const auto lat = r.mean_latency()) line("entire", "all", "latency", "mean_seconds", *lat);
  block("entire", "all", r.overall);
  for (PhaseLabel p : kPhases) {
    const auto it = r.phases.find(p);
    if (it == r.phases.end()) continue;
    counts(to_string(p), it->second.counts);
    block(to_string(p), "all", it->second.metrics);
  }
  for (std::size_t k = 0; k < r.per_step.size(); ++k) block("entire", std::to_string(k + 1), r.per_step[k]);
  return os.str();
}

json to_json(const SampleCounts& c) {
  return json{{"total", c.total},
              {"evaluated", c.evaluated},
              {"excluded_severe", c.excluded_severe},
              {"failed_missing", c.failed_missing},
              {"failed_format", c.failed_format}};
}

SampleCounts counts_from_json(const json& j) {
  return SampleCounts{j.at("total").get<std::size_t>(), j.at("evaluated").get<std::size_t>(),
                      j.at("excluded_severe").get<std::size_t>(), j.at("failed_missing").get<std::size_t>(),
                      j.at("failed_format").get<std::size_t>()};
}

json to_json(const MetricBlock& b) {
  json j = json::object();
  j["available"] = b.available();
  for (Attribute a : kAttributes) {
    const auto& acc = b[a];
    json e{{"count", acc.count}, {"sum_abs", acc.sum_abs}, {"sum_sq", acc.sum_sq}};
    if (b.available()) {
      e["mae"] = acc.mae();
      e["rmse"] = acc.rmse();
    }
    j[std::string(to_string(a))] = std::move(e);
  }
  return j;
}

MetricBlock block_from_json(const json& j) {
  MetricBlock b;
  for (Attribute a : kAttributes) {
    const json& e = j.at(std::string(to_string(a)));
    auto& acc = b.attributes[static_cast<std::size_t>(a)];
    acc.count = e.at("count").get<std::size_t>();
    acc.sum_abs = e.at("sum_abs").get<double>();
    acc.sum_sq = e.at("sum_sq").get<double>();
  }
  return b;
}

std::string emit_json(const MetricsReport& r) {
  json j;
  j["model"] = r.model;
  j["template_version"] = r.template_version;
  j["horizon"] = r.horizon;
  j["counts"] = to_json(r.counts);
  if (const auto lat = r.mean_latency()) {
    j["mean_latency_seconds"] = *lat;
    j["latency_sum_seconds"] = *r.latency_sum;
  } else if (r.latency_sum) {
    j["latency_sum_seconds"] = *r.latency_sum;
  }
  j["overall"] = to_json(r.overall);
  json phases = json::object();
  for (PhaseLabel p : kPhases) {
    const auto it = r.phases.find(p);
    if (it == r.phases.end()) continue;
    phases[std::string(to_string(p))] = json{{"counts", to_json(it->second.counts)},
                                             {"metrics", to_json(it->second.metrics)}};
  }
  j["phases"] = std::move(phases);
  json steps = json::array();
  for (const auto& b : r.per_step) steps.push_back(to_json(b));
  j["per_step"] = std::move(steps);
  return j.dump(2) + "\n";
}

}  // namespace

std::string emit_report(const MetricsReport& report, ReportFormat format) {
  check_report(report);
  switch (format) {
    case ReportFormat::Table: return emit_table(report);
    case ReportFormat::Csv: return emit_csv(report);
    case ReportFormat::Json: return emit_json(report);
  }
  return {};
}

MetricsReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    MetricsReport r;
    r.model = j.at("model").get<std::string>();
    r.template_version = j.at("template_version").get<std::string>();
    r.horizon = j.at("horizon").get<int>();
    r.counts = counts_from_json(j.at("counts"));
    if (j.contains("latency_sum_seconds")) r.latency_sum = j["latency_sum_seconds"].get<double>();
    r.overall = block_from_json(j.at("overall"));
    for (const auto& [name, pj] : j.at("phases").items()) {
      const auto phase = parse_phase(name);
      if (!phase) throw Error(fmt::format("unknown phase '{}' in report", name));
      r.phases[*phase] = PhaseReport{counts_from_json(pj.at("counts")), block_from_json(pj.at("metrics"))};
    }
    for (const auto& b : j.at("per_step")) r.per_step.push_back(block_from_json(b));
    return r;
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed report: {}", e.what()));
  }
}

std::vector<CsvRow> parse_report_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error("report csv: unexpected header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = adsb::split_csv_line(line);
    if (cells.size() != 7) throw Error(fmt::format("report csv: expected 7 cells, got {}", cells.size()));
    CsvRow r;
    r.model = cells[0];
    r.horizon = std::stoi(cells[1]);
    r.phase = cells[2];
    r.step = cells[3];
    r.attribute = cells[4];
    r.metric = cells[5];
    r.value = std::stod(cells[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ftp::eval
