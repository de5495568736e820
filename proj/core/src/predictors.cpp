#include "ftp/predictors.hpp"

#include <cmath>

#include "ftp/motion.hpp"

namespace ftp::predictors {

std::vector<Waypoint> predict_persistence(const Window& window, int n) {
  std::vector<Waypoint> out;
  out.reserve(static_cast<std::size_t>(n));
  Waypoint w = window.last_input();
  for (int i = 0; i < n; ++i) {
    w.timestamp += kStepSeconds;
    out.push_back(w);
  }
  return out;
}

std::vector<Waypoint> predict_kinematic(const Window& window, int n) {
  const Waypoint& last = window.last_input();
  if (std::abs(last.latitude) >= motion::kPolarLimit) throw Error("predict_kinematic: polar singularity");
  const Waypoint& prev = window.inputs.size() >= 2 ? window.inputs[window.inputs.size() - 2] : last;

  const auto dt = static_cast<double>(last.timestamp - prev.timestamp);
  motion::Track track{};
  double climb_per_step = 0.0;
  if (dt > 0.0) {
    track = motion::track_between({prev.longitude, prev.latitude}, {last.longitude, last.latitude}, dt);
    climb_per_step = (last.altitude - prev.altitude) * static_cast<double>(kStepSeconds) / dt;
  }

  std::vector<Waypoint> out;
  out.reserve(static_cast<std::size_t>(n));
  Waypoint w = last;
  motion::Position pos{last.longitude, last.latitude};
  for (int i = 0; i < n; ++i) {
    if (track.speed_kmh > 0.0) {
      if (std::abs(pos.latitude) >= motion::kPolarLimit) throw Error("predict_kinematic: polar singularity");
      pos = motion::step(pos, track.speed_kmh, track.heading_deg, static_cast<double>(kStepSeconds));
    }
    w.timestamp += kStepSeconds;
    w.longitude = pos.longitude;
    w.latitude = pos.latitude;
    w.altitude += climb_per_step;
    out.push_back(w);
  }
  return out;
}

}  // namespace ftp::predictors
