#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ftp/domain.hpp"

namespace ftp::prompt {

/// Identifies the system-prompt wording and tuple layout below. Bump it
/// whenever either changes.
inline constexpr std::string_view kTemplateVersion = "ftp-prompt-v1";

struct PromptRecord {
  std::string system;
  std::string user;
  std::string assistant;
  std::string template_version;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

/// One "(lon, lat, alt, vel, hdg)" line per waypoint with 5/5/3/3/2
/// decimals, newline-joined, no trailing newline. Timestamps are omitted.
std::string serialize_waypoints(std::span<const Waypoint> waypoints);

/// System text for a horizon: role, attribute glossary, output rules and
/// the sentence "Predict the next <n> waypoint(s)".
std::string system_prompt(int horizon);

/// Reads the horizon back out of a system_prompt text.
std::optional<int> parse_horizon(std::string_view system_text);

/// User text holds the 16 inputs; assistant holds the targets when
/// `include_assistant`, otherwise it stays empty (inference mode).
PromptRecord build_prompt(const Window& window, bool include_assistant);

/// A parenthesised group that contains at least one digit.
struct TupleCandidate {
  std::string text;
  std::size_t arity = 0;
  /// Set only when the group is exactly five decimal numbers.
  std::optional<std::array<double, 5>> values;
};

/// Scans free text (prose, markdown, code fences) for tuple candidates in
/// order of appearance.
std::vector<TupleCandidate> extract_tuples(std::string_view text);

enum class FailureKind { MissingTrajectory, UnexpectedFormat, SevereDeviation };

std::string_view to_string(FailureKind k);
std::optional<FailureKind> parse_failure_kind(std::string_view s);

struct ParseFailure {
  FailureKind kind;
  std::string diagnostic;

  friend bool operator==(const ParseFailure&, const ParseFailure&) = default;
};

/// Either the predicted waypoints or the reason there are none.
class ParseOutcome {
 public:
  static ParseOutcome success(std::vector<Waypoint> ws, std::string note = {});
  static ParseOutcome failure(FailureKind kind, std::string diagnostic);

  bool ok() const { return std::holds_alternative<std::vector<Waypoint>>(value_); }
  const std::vector<Waypoint>& waypoints() const { return std::get<std::vector<Waypoint>>(value_); }
  const ParseFailure& failure() const { return std::get<ParseFailure>(value_); }
  /// Non-fatal remarks, e.g. extra tuples ignored.
  const std::string& note() const { return note_; }

 private:
  std::variant<std::vector<Waypoint>, ParseFailure> value_;
  std::string note_;
};

inline constexpr double kDefaultSevereRadius = 5.0;

/// True when the predicted position is outside the coordinate box, more
/// than `radius_deg` from the last input in longitude or latitude, or of
/// opposite sign to a last-input coordinate whose magnitude exceeds 1°.
bool classify_severe(const Waypoint& predicted, const Window& context,
                     double radius_deg = kDefaultSevereRadius);

/// Turns model output into `horizon` waypoints timed after the context's
/// last input. Never throws on arbitrary text.
ParseOutcome parse_completion(std::string_view text, int horizon, const Window& context,
                              double radius_deg = kDefaultSevereRadius);

struct DatasetManifest {
  std::string template_version;
  int horizon = 0;
  std::size_t record_count = 0;
  std::string source_digest;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Manifest path used for a dataset: "<path>.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& dataset);

/// JSON Lines {"system","user","assistant"} plus the sidecar manifest.
/// Throws Error if records mix template versions or on I/O failure.
void emit_dataset(std::span<const PromptRecord> records, const std::filesystem::path& path, int horizon,
                  std::string_view source_digest);

struct Dataset {
  std::vector<PromptRecord> records;
  DatasetManifest manifest;
};

Dataset read_dataset(const std::filesystem::path& path);

enum class TokenScheme { DigitSplit, NumberAtomic };

/// Rough token count for latency analysis. Numbers count as one token
/// (NumberAtomic) or as digit groups plus decimal points (DigitSplit);
/// letter runs and whitespace runs count one each; any other character is
/// its own token.
std::size_t estimate_tokens(std::string_view text, TokenScheme scheme);

}  // namespace ftp::prompt
