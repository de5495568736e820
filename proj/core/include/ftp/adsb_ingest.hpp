#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ftp/domain.hpp"

namespace ftp::adsb {

/// Thrown for rows that cannot be mapped onto the header.
class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t row, const std::string& what);
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

enum class Column { Timestamp, UtcTime, Callsign, Longitude, Latitude, Altitude, Velocity, Heading };
inline constexpr std::size_t kColumnCount = 8;

/// Position of each required column within a CSV row.
struct ColumnMap {
  std::array<std::size_t, kColumnCount> index{};
  std::size_t width = 0;

  std::size_t operator[](Column c) const { return index[static_cast<std::size_t>(c)]; }
};

/// Header names in canonical order:
/// timestamp,utc_time,callsign,longitude,latitude,altitude,velocity,heading
std::string_view column_name(Column c);
std::string canonical_header();

/// Matches required columns case-insensitively; extra columns are ignored.
/// Throws Error naming the first missing column.
ColumnMap parse_header(std::string_view line);

enum class ParseMode { Tolerant, Strict };

/// One CSV row. Missing or unparseable numeric cells are `nullopt`, never 0.
struct RawRecord {
  std::optional<std::int64_t> timestamp;
  std::string utc_time;
  std::string callsign;
  std::optional<double> longitude;
  std::optional<double> latitude;
  std::optional<double> altitude;
  std::optional<double> velocity;
  std::optional<double> heading;

  bool complete() const {
    return timestamp && longitude && latitude && altitude && velocity && heading;
  }
  /// Requires complete().
  Waypoint waypoint() const;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

/// Splits one CSV line on commas, honouring double-quoted cells.
std::vector<std::string> split_csv_line(std::string_view line);

/// `row` is the 1-based line number used in diagnostics.
RawRecord parse_record(std::string_view line, const ColumnMap& header, std::size_t row,
                       ParseMode mode = ParseMode::Tolerant);

struct ReadResult {
  std::vector<RawRecord> records;
  std::size_t utc_mismatches = 0;
};

/// Reads a whole CSV stream (header first). Blank lines are skipped.
/// Rows whose utc_time disagrees with the Unix timestamp are counted (and
/// reported through `diagnostics` when given), never rejected.
ReadResult read_csv(std::istream& in, ParseMode mode = ParseMode::Tolerant,
                    std::ostream* diagnostics = nullptr);

/// Formats a Unix timestamp as "YYYY-M-D H:MM:SS" (UTC).
std::string format_utc(std::int64_t unix_seconds);
/// Inverse of format_utc; accepts zero-padded fields too.
std::optional<std::int64_t> parse_utc(std::string_view text);

struct CleanSummary {
  std::size_t input_trajectories = 0;
  std::size_t kept = 0;
  std::size_t incomplete = 0;
  std::size_t invalid = 0;
  std::size_t duplicate = 0;
  /// Identical consecutive rows of one flight collapsed before grouping.
  std::size_t repeated_rows = 0;

  friend bool operator==(const CleanSummary&, const CleanSummary&) = default;
};

struct CleanResult {
  std::vector<Trajectory> trajectories;
  CleanSummary summary;
};

/// Groups records into trajectories and filters them.
///
/// A row identical to the previous row of its callsign is collapsed first.
/// Each callsign's records are then sorted by timestamp; when a timestamp
/// repeats (a replayed or copied flight), the k-th record at that time
/// goes to the k-th copy of the flight, each copy becoming its own
/// trajectory. A record without a timestamp stays with the copy of the
/// record before it. A trajectory is dropped as incomplete if any record lacks a
/// field, as invalid if any waypoint fails validate_waypoint, and as a
/// duplicate if its (callsign, first timestamp, last timestamp) was already
/// kept. Survivors are canonically rounded and sorted by callsign, then
/// first timestamp.
CleanResult clean_trajectories(const std::vector<RawRecord>& records);

/// Unrounded minute buckets: one waypoint per non-empty floor(t/60) bucket
/// at its start time, arithmetic means for the linear attributes and a
/// circular mean for heading.
Trajectory aggregate_minutes_raw(const Trajectory& traj);

/// aggregate_minutes_raw followed by canonical rounding.
Trajectory aggregate_minutes(const Trajectory& traj);

/// Converts trajectories back to records (utc_time derived from timestamp).
std::vector<RawRecord> to_records(const std::vector<Trajectory>& trajectories);

/// Writes header plus one row per record with canonical decimal counts.
/// All records must be complete.
void write_csv(std::ostream& out, const std::vector<RawRecord>& records);

}  // namespace ftp::adsb
