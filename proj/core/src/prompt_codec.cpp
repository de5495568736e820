#include "ftp/prompt_codec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ftp/digest.hpp"

namespace ftp::prompt {

using json = nlohmann::ordered_json;

std::string serialize_waypoints(std::span<const Waypoint> waypoints) {
  std::string out;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const Waypoint& w = waypoints[i];
    if (i) out.push_back('\n');
    // +0.0 folds negative zero.
    out += fmt::format("({:.5f}, {:.5f}, {:.3f}, {:.3f}, {:.2f})", w.longitude + 0.0, w.latitude + 0.0,
                       w.altitude + 0.0, w.velocity + 0.0, w.heading + 0.0);
  }
  return out;
}

std::string system_prompt(int horizon) {
  return fmt::format(
      "You are an expert in flight prediction. You receive the recent trajectory of one aircraft as "
      "{} waypoints sampled at one-minute intervals, oldest first.\n"
      "Each waypoint is a tuple (longitude, latitude, altitude, velocity, heading):\n"
      "- longitude and latitude: position in decimal degrees, 5 decimal places;\n"
      "- altitude: height above mean sea level in meters, 3 decimal places;\n"
      "- velocity: ground speed in kilometers per hour, 3 decimal places;\n"
      "- heading: track angle in degrees clockwise from north, in [0, 360), 2 decimal places.\n"
      "Predict the next {} {} of the aircraft, one minute apart, continuing from the last given "
      "waypoint.\n"
      "Output only coordinate tuples, one per line, in exactly the input format "
      "(longitude, latitude, altitude, velocity, heading), with no other text.",
      kInputSteps, horizon, horizon == 1 ? "waypoint" : "waypoints");
}

std::optional<int> parse_horizon(std::string_view system_text) {
  static const std::regex re(R"(Predict the next (\d+) waypoints?)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(system_text.begin(), system_text.end(), m, re)) return std::nullopt;
  try {
    return std::stoi(m[1].str());
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

PromptRecord build_prompt(const Window& window, bool include_assistant) {
  PromptRecord r;
  r.system = system_prompt(window.horizon());
  r.user = serialize_waypoints(window.inputs);
  if (include_assistant) r.assistant = serialize_waypoints(window.targets);
  r.template_version = std::string(kTemplateVersion);
  return r;
}

namespace {

std::string_view strip_field(std::string_view s) {
  auto junk = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '`' || c == '_';
  };
  while (!s.empty() && junk(s.front())) s.remove_prefix(1);
  while (!s.empty() && junk(s.back())) s.remove_suffix(1);
  return s;
}

TupleCandidate make_candidate(std::string_view body) {
  TupleCandidate c;
  c.text = std::string(body);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ',') {
      fields.push_back(strip_field(body.substr(start, i - start)));
      start = i + 1;
    }
  }
  c.arity = fields.size();
  if (fields.size() != 5) return c;
  std::array<double, 5> v{};
  for (std::size_t i = 0; i < 5; ++i) {
    auto d = parse_decimal(fields[i]);
    if (!d) return c;
    v[i] = *d;
  }
  c.values = v;
  return c;
}

}  // namespace

std::vector<TupleCandidate> extract_tuples(std::string_view text) {
  std::vector<TupleCandidate> out;
  std::optional<std::size_t> open;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '(') {
      open = i;
    } else if (text[i] == ')' && open) {
      const auto body = text.substr(*open + 1, i - *open - 1);
      open.reset();
      const bool has_digit =
          std::any_of(body.begin(), body.end(), [](char c) { return c >= '0' && c <= '9'; });
      if (has_digit) out.push_back(make_candidate(body));
    }
  }
  return out;
}

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::MissingTrajectory: return "missing_trajectory";
    case FailureKind::UnexpectedFormat: return "unexpected_format";
    case FailureKind::SevereDeviation: return "severe_deviation";
  }
  return "?";
}

std::optional<FailureKind> parse_failure_kind(std::string_view s) {
  for (auto k : {FailureKind::MissingTrajectory, FailureKind::UnexpectedFormat, FailureKind::SevereDeviation}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

ParseOutcome ParseOutcome::success(std::vector<Waypoint> ws, std::string note) {
  ParseOutcome o;
  o.value_ = std::move(ws);
  o.note_ = std::move(note);
  return o;
}

ParseOutcome ParseOutcome::failure(FailureKind kind, std::string diagnostic) {
  ParseOutcome o;
  o.value_ = ParseFailure{kind, std::move(diagnostic)};
  return o;
}

bool classify_severe(const Waypoint& predicted, const Window& context, double radius_deg) {
  const Waypoint& last = context.last_input();
  const double lon = predicted.longitude;
  const double lat = predicted.latitude;
  if (!std::isfinite(lon) || !std::isfinite(lat)) return true;
  if (lon < -180.0 || lon > 180.0 || lat < -90.0 || lat > 90.0) return true;
  if (std::abs(lon - last.longitude) > radius_deg || std::abs(lat - last.latitude) > radius_deg) return true;
  auto flipped = [](double pred, double ref) { return std::abs(ref) > 1.0 && pred * ref < 0.0; };
  return flipped(lon, last.longitude) || flipped(lat, last.latitude);
}

ParseOutcome parse_completion(std::string_view text, int horizon, const Window& context, double radius_deg) {
  if (horizon < 1) return ParseOutcome::failure(FailureKind::UnexpectedFormat, "non-positive horizon");
  const auto candidates = extract_tuples(text);
  if (candidates.empty()) {
    return ParseOutcome::failure(FailureKind::MissingTrajectory, "no coordinate tuples in completion");
  }
  const auto n = static_cast<std::size_t>(horizon);
  for (std::size_t i = 0; i < std::min(n, candidates.size()); ++i) {
    if (!candidates[i].values) {
      return ParseOutcome::failure(
          FailureKind::UnexpectedFormat,
          fmt::format("tuple {} '({})' is not five decimal numbers (arity {})", i + 1, candidates[i].text,
                      candidates[i].arity));
    }
  }
  if (candidates.size() < n) {
    return ParseOutcome::failure(FailureKind::UnexpectedFormat,
                                 fmt::format("expected {} tuples, found {}", n, candidates.size()));
  }

  const std::int64_t t0 = context.inputs.empty() ? 0 : context.last_input().timestamp;
  std::vector<Waypoint> ws;
  ws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = *candidates[i].values;
    Waypoint w{t0 + static_cast<std::int64_t>(i + 1) * kStepSeconds, v[0], v[1], v[2], v[3], v[4]};
    if (!context.inputs.empty() && classify_severe(w, context, radius_deg)) {
      return ParseOutcome::failure(
          FailureKind::SevereDeviation,
          fmt::format("step {} ({}, {}) is implausible next to last input ({}, {})", i + 1, w.longitude,
                      w.latitude, context.last_input().longitude, context.last_input().latitude));
    }
    ws.push_back(w);
  }
  std::string note;
  if (candidates.size() > n) note = fmt::format("ignored {} extra tuple(s)", candidates.size() - n);
  return ParseOutcome::success(std::move(ws), std::move(note));
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  auto p = dataset;
  p += ".manifest.json";
  return p;
}

void emit_dataset(std::span<const PromptRecord> records, const std::filesystem::path& path, int horizon,
                  std::string_view source_digest) {
  std::string version = records.empty() ? std::string(kTemplateVersion) : records.front().template_version;
  std::string body;
  for (const PromptRecord& r : records) {
    if (r.template_version != version) {
      throw Error(fmt::format("emit_dataset: mixed template versions '{}' and '{}'", version, r.template_version));
    }
    json j;
    j["system"] = r.system;
    j["user"] = r.user;
    j["assistant"] = r.assistant;
    body += j.dump();
    body.push_back('\n');
  }
  write_file(path, body);

  json m;
  m["template_version"] = version;
  m["horizon"] = horizon;
  m["record_count"] = records.size();
  m["source_digest"] = source_digest;
  write_file(manifest_path(path), m.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset d;
  try {
    const json m = json::parse(read_file(manifest_path(path)));
    d.manifest.template_version = m.at("template_version").get<std::string>();
    d.manifest.horizon = m.at("horizon").get<int>();
    d.manifest.record_count = m.at("record_count").get<std::size_t>();
    d.manifest.source_digest = m.at("source_digest").get<std::string>();

    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      d.records.push_back(PromptRecord{j.at("system").get<std::string>(), j.at("user").get<std::string>(),
                                       j.at("assistant").get<std::string>(), d.manifest.template_version});
    }
  } catch (const json::exception& e) {
    throw Error(fmt::format("dataset '{}': {}", path.string(), e.what()));
  }
  if (d.records.size() != d.manifest.record_count) {
    throw Error(fmt::format("dataset '{}' has {} records, manifest says {}", path.string(), d.records.size(),
                            d.manifest.record_count));
  }
  return d;
}

std::size_t estimate_tokens(std::string_view text, TokenScheme scheme) {
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  auto alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t count = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (digit(c)) {
      std::size_t pieces = 1;
      while (i < n && digit(text[i])) ++i;
      if (i + 1 < n && text[i] == '.' && digit(text[i + 1])) {
        ++i;
        while (i < n && digit(text[i])) ++i;
        pieces = 3;
      }
      count += scheme == TokenScheme::NumberAtomic ? 1 : pieces;
    } else if (alpha(c)) {
      while (i < n && alpha(text[i])) ++i;
      ++count;
    } else if (space(c)) {
      while (i < n && space(text[i])) ++i;
      ++count;
    } else {
      ++i;
      ++count;
    }
  }
  return count;
}

}  // namespace ftp::prompt
