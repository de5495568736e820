#include "ftp/windowing.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

namespace ftp::windowing {

using json = nlohmann::ordered_json;

namespace {

bool supported_horizon(int h) { return h == 1 || h == 4 || h == 8; }

json waypoint_row(const Waypoint& w) {
  return json::array({w.timestamp, w.longitude, w.latitude, w.altitude, w.velocity, w.heading});
}

Waypoint waypoint_from_row(const json& row) {
  if (!row.is_array() || row.size() != 6) throw Error("window row must be [t,lon,lat,alt,vel,hdg]");
  return Waypoint{row[0].get<std::int64_t>(), row[1].get<double>(), row[2].get<double>(),
                  row[3].get<double>(),       row[4].get<double>(), row[5].get<double>()};
}

}  // namespace

bool check_continuity(std::span<const Waypoint> waypoints) {
  if (waypoints.empty()) throw Error("check_continuity: empty list");
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (waypoints[i].timestamp - waypoints[i - 1].timestamp != kStepSeconds) return false;
  }
  return true;
}

std::vector<Window> sample_windows(const Trajectory& traj, int horizon, const SampleOptions& opts) {
  if (horizon < 1 || (!opts.allow_any_horizon && !supported_horizon(horizon))) {
    throw Error(fmt::format("unsupported horizon {}", horizon));
  }
  const int size = window_size(horizon);
  const int stride = opts.stride == 0 ? size + 1 : opts.stride;
  if (stride < size) throw Error(fmt::format("stride {} too small for window size {}", stride, size));

  std::vector<Window> out;
  const auto& ws = traj.waypoints;
  const std::size_t n = ws.size();
  const auto w = static_cast<std::size_t>(size);
  std::size_t k = 0;
  while (k + w <= n) {
    std::size_t brk = k + w;
    for (std::size_t j = k + 1; j < k + w; ++j) {
      if (ws[j].timestamp - ws[j - 1].timestamp != kStepSeconds) {
        brk = j;
        break;
      }
    }
    if (brk < k + w) {
      k = brk;
      continue;
    }
    Window win;
    win.callsign = traj.callsign;
    win.inputs.assign(ws.begin() + static_cast<std::ptrdiff_t>(k),
                      ws.begin() + static_cast<std::ptrdiff_t>(k + kInputSteps));
    win.targets.assign(ws.begin() + static_cast<std::ptrdiff_t>(k + kInputSteps),
                       ws.begin() + static_cast<std::ptrdiff_t>(k + w));
    out.push_back(std::move(win));
    std::size_t next = std::min(k + static_cast<std::size_t>(stride), n);
    for (std::size_t j = k + w; j < next; ++j) {
      if (ws[j].timestamp - ws[j - 1].timestamp != kStepSeconds) {
        next = j;
        break;
      }
    }
    k = next;
  }
  return out;
}

std::vector<Window> sample_all(std::span<const Trajectory> trajectories, int horizon, const SampleOptions& opts) {
  std::vector<Window> out;
  for (const Trajectory& t : trajectories) {
    auto ws = sample_windows(t, horizon, opts);
    out.insert(out.end(), std::make_move_iterator(ws.begin()), std::make_move_iterator(ws.end()));
  }
  return out;
}

void write_windows(std::ostream& out, std::span<const Window> windows) {
  for (const Window& w : windows) {
    json j;
    j["callsign"] = w.callsign;
    j["horizon"] = w.horizon();
    json in = json::array();
    for (const Waypoint& p : w.inputs) in.push_back(waypoint_row(p));
    json tg = json::array();
    for (const Waypoint& p : w.targets) tg.push_back(waypoint_row(p));
    j["input"] = std::move(in);
    j["target"] = std::move(tg);
    out << j.dump() << '\n';
  }
}

std::vector<Window> read_windows(std::istream& in) {
  std::vector<Window> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Window w;
      w.callsign = j.at("callsign").get<std::string>();
      for (const auto& r : j.at("input")) w.inputs.push_back(waypoint_from_row(r));
      for (const auto& r : j.at("target")) w.targets.push_back(waypoint_from_row(r));
      if (w.inputs.size() != static_cast<std::size_t>(kInputSteps)) {
        throw Error(fmt::format("expected {} input waypoints, found {}", kInputSteps, w.inputs.size()));
      }
      if (j.at("horizon").get<int>() != w.horizon()) throw Error("horizon does not match target count");
      out.push_back(std::move(w));
    } catch (const json::exception& e) {
      throw Error(fmt::format("window line {}: {}", row, e.what()));
    } catch (const Error& e) {
      throw Error(fmt::format("window line {}: {}", row, e.what()));
    }
  }
  return out;
}

}  // namespace ftp::windowing
