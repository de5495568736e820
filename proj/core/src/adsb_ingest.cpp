#include "ftp/adsb_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace ftp::adsb {

MalformedRow::MalformedRow(std::size_t row, const std::string& what)
    : Error(fmt::format("malformed row {}: {}", row, what)), row_(row) {}

namespace {

constexpr std::string_view kNames[kColumnCount] = {"timestamp", "utc_time", "callsign", "longitude",
                                                   "latitude",  "altitude", "velocity", "heading"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<std::int64_t> parse_integer(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::string quote_if_needed(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view column_name(Column c) { return kNames[static_cast<std::size_t>(c)]; }

std::string canonical_header() {
  std::string h;
  for (std::size_t i = 0; i < kColumnCount; ++i) {
    if (i) h.push_back(',');
    h.append(kNames[i]);
  }
  return h;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

ColumnMap parse_header(std::string_view line) {
  const auto cells = split_csv_line(line);
  ColumnMap map;
  map.width = cells.size();
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    auto it = std::find_if(cells.begin(), cells.end(),
                           [&](const std::string& cell) { return iequals(trim(cell), kNames[c]); });
    if (it == cells.end()) throw Error(fmt::format("CSV header lacks column '{}'", kNames[c]));
    map.index[c] = static_cast<std::size_t>(it - cells.begin());
  }
  return map;
}

Waypoint RawRecord::waypoint() const {
  if (!complete()) throw Error("RawRecord::waypoint on incomplete record");
  return Waypoint{*timestamp, *longitude, *latitude, *altitude, *velocity, *heading};
}

RawRecord parse_record(std::string_view line, const ColumnMap& header, std::size_t row, ParseMode mode) {
  const auto cells = split_csv_line(line);
  if (cells.size() != header.width) {
    throw MalformedRow(row, fmt::format("expected {} cells, found {}", header.width, cells.size()));
  }
  RawRecord r;
  auto cell = [&](Column c) { return trim(cells[header[c]]); };
  auto numeric = [&](Column c) -> std::optional<double> {
    const auto text = cell(c);
    if (text.empty()) return std::nullopt;
    auto v = parse_decimal(text);
    if (!v && mode == ParseMode::Strict) {
      throw MalformedRow(row, fmt::format("non-numeric {} '{}'", column_name(c), text));
    }
    return v;
  };

  const auto ts_text = cell(Column::Timestamp);
  if (!ts_text.empty()) {
    r.timestamp = parse_integer(ts_text);
    if (!r.timestamp && mode == ParseMode::Strict) {
      throw MalformedRow(row, fmt::format("non-integer timestamp '{}'", ts_text));
    }
  }
  r.utc_time = std::string(cell(Column::UtcTime));
  r.callsign = std::string(cell(Column::Callsign));
  r.longitude = numeric(Column::Longitude);
  r.latitude = numeric(Column::Latitude);
  r.altitude = numeric(Column::Altitude);
  r.velocity = numeric(Column::Velocity);
  r.heading = numeric(Column::Heading);
  return r;
}

std::string format_utc(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{unix_seconds}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  return fmt::format("{}-{}-{} {}:{:02}:{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

std::optional<std::int64_t> parse_utc(std::string_view text) {
  text = trim(text);
  int fields[6] = {};
  const char seps[5] = {'-', '-', ' ', ':', ':'};
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 6; ++i) {
    auto [next, ec] = std::from_chars(p, end, fields[i]);
    if (ec != std::errc{}) return std::nullopt;
    p = next;
    if (i < 5) {
      if (p == end || *p != seps[i]) return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{fields[0]}, month{static_cast<unsigned>(fields[1])},
                           day{static_cast<unsigned>(fields[2])}};
  if (!ymd.ok() || fields[3] > 23 || fields[4] > 59 || fields[5] > 60) return std::nullopt;
  const auto tp = sys_days{ymd} + hours{fields[3]} + minutes{fields[4]} + seconds{fields[5]};
  return tp.time_since_epoch().count();
}

ReadResult read_csv(std::istream& in, ParseMode mode, std::ostream* diagnostics) {
  ReadResult result;
  std::string line;
  std::size_t row = 0;
  std::optional<ColumnMap> header;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (!header) {
      header = parse_header(line);
      continue;
    }
    RawRecord r = parse_record(line, *header, row, mode);
    if (r.timestamp && !r.utc_time.empty()) {
      const auto utc = parse_utc(r.utc_time);
      if (!utc || *utc != *r.timestamp) {
        ++result.utc_mismatches;
        if (diagnostics) {
          *diagnostics << fmt::format("row {}: utc_time '{}' disagrees with timestamp {}\n", row,
                                      r.utc_time, *r.timestamp);
        }
      }
    }
    result.records.push_back(std::move(r));
  }
  if (!header) throw Error("CSV input has no header row");
  return result;
}

CleanResult clean_trajectories(const std::vector<RawRecord>& records) {
  struct Group {
    std::string callsign;
    std::vector<const RawRecord*> rows;
  };
  struct Callsign {
    const RawRecord* last = nullptr;
    std::size_t last_copy = 0;
    std::map<std::int64_t, std::size_t> seen;
    std::vector<std::vector<const RawRecord*>> copies;
  };
  std::map<std::string, Callsign> by_callsign;
  CleanResult result;

  for (const RawRecord& r : records) {
    Callsign& c = by_callsign[r.callsign];
    if (c.last != nullptr && *c.last == r) {
      ++result.summary.repeated_rows;
      continue;
    }
    // The k-th record at a timestamp belongs to the k-th copy of the flight.
    // A record without a timestamp joins the copy of the record before it.
    const std::size_t copy = r.timestamp ? c.seen[*r.timestamp]++ : c.last_copy;
    if (copy >= c.copies.size()) c.copies.resize(copy + 1);
    c.copies[copy].push_back(&r);
    c.last = &r;
    c.last_copy = copy;
  }

  std::vector<Group> groups;
  for (auto& [callsign, c] : by_callsign) {
    for (auto& rows : c.copies) {
      std::stable_sort(rows.begin(), rows.end(), [](const RawRecord* a, const RawRecord* b) {
        if (!a->timestamp || !b->timestamp) return a->timestamp.has_value() && !b->timestamp.has_value();
        return *a->timestamp < *b->timestamp;
      });
      groups.push_back(Group{callsign, std::move(rows)});
    }
  }

  result.summary.input_trajectories = groups.size();
  std::set<std::tuple<std::string, std::int64_t, std::int64_t>> seen;
  for (const Group& g : groups) {
    const bool complete = std::all_of(g.rows.begin(), g.rows.end(),
                                      [](const RawRecord* r) { return r->complete(); });
    if (!complete) {
      ++result.summary.incomplete;
      continue;
    }
    Trajectory t{g.callsign, {}};
    t.waypoints.reserve(g.rows.size());
    bool valid = true;
    for (const RawRecord* r : g.rows) {
      const Waypoint w = r->waypoint();
      if (!validate_waypoint(w)) {
        valid = false;
        break;
      }
      t.waypoints.push_back(round_waypoint(w));
    }
    if (!valid) {
      ++result.summary.invalid;
      continue;
    }
    auto key = std::make_tuple(t.callsign, t.waypoints.front().timestamp, t.waypoints.back().timestamp);
    if (!seen.insert(std::move(key)).second) {
      ++result.summary.duplicate;
      continue;
    }
    result.trajectories.push_back(std::move(t));
  }
  std::stable_sort(result.trajectories.begin(), result.trajectories.end(),
                   [](const Trajectory& a, const Trajectory& b) {
                     return std::tie(a.callsign, a.waypoints.front().timestamp) <
                            std::tie(b.callsign, b.waypoints.front().timestamp);
                   });
  result.summary.kept = result.trajectories.size();
  return result;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Trajectory aggregate_minutes_raw(const Trajectory& traj) {
  Trajectory out{traj.callsign, {}};
  const auto& ws = traj.waypoints;
  std::vector<double> headings;
  for (std::size_t i = 0; i < ws.size();) {
    const std::int64_t bucket = floor_div(ws[i].timestamp, kStepSeconds);
    std::size_t j = i;
    double lon = 0, lat = 0, alt = 0, vel = 0;
    headings.clear();
    while (j < ws.size() && floor_div(ws[j].timestamp, kStepSeconds) == bucket) {
      lon += ws[j].longitude;
      lat += ws[j].latitude;
      alt += ws[j].altitude;
      vel += ws[j].velocity;
      headings.push_back(ws[j].heading);
      ++j;
    }
    const auto n = static_cast<double>(j - i);
    out.waypoints.push_back(Waypoint{bucket * kStepSeconds, lon / n, lat / n, alt / n, vel / n,
                                     circular_mean(headings)});
    i = j;
  }
  return out;
}

Trajectory aggregate_minutes(const Trajectory& traj) {
  Trajectory out = aggregate_minutes_raw(traj);
  for (Waypoint& w : out.waypoints) w = round_waypoint(w);
  return out;
}

std::vector<RawRecord> to_records(const std::vector<Trajectory>& trajectories) {
  std::vector<RawRecord> out;
  for (const Trajectory& t : trajectories) {
    for (const Waypoint& w : t.waypoints) {
      out.push_back(RawRecord{w.timestamp, format_utc(w.timestamp), t.callsign, w.longitude,
                              w.latitude, w.altitude, w.velocity, w.heading});
    }
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<RawRecord>& records) {
  out << canonical_header() << '\n';
  for (const RawRecord& r : records) {
    if (!r.complete()) throw Error("write_csv: incomplete record for " + r.callsign);
    const Waypoint w = round_waypoint(r.waypoint());
    out << fmt::format("{},{},{},{:.5f},{:.5f},{:.3f},{:.3f},{:.2f}\n", w.timestamp,
                       quote_if_needed(r.utc_time), quote_if_needed(r.callsign), w.longitude,
                       w.latitude, w.altitude, w.velocity, w.heading);
  }
}

}  // namespace ftp::adsb
