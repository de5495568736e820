#pragma once

// Random fixtures shared by the unit tests and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ftp/domain.hpp"

namespace ftp::fixtures {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Magnitude in [lo, hi] with a random sign.
inline double signed_magnitude(Rng& rng, double lo, double hi) {
  const double m = uniform(rng, lo, hi);
  return uniform_int(rng, 0, 1) == 0 ? -m : m;
}

inline Waypoint random_waypoint(Rng& rng, std::int64_t t = 0) {
  return round_waypoint(Waypoint{t, uniform(rng, -180.0, 180.0), uniform(rng, -90.0, 90.0),
                                 uniform(rng, -500.0, 15000.0), uniform(rng, 0.0, 1200.0),
                                 uniform(rng, 0.0, 359.99)});
}

/// Canonically rounded window whose waypoints drift by less than a degree,
/// well away from the poles, the antimeridian and the sign boundaries, so
/// every target is a plausible (non-severe) prediction.
inline Window random_window(Rng& rng, int horizon) {
  Window w;
  w.callsign = "T" + std::to_string(uniform_int(rng, 0, 9999));
  const std::int64_t t0 = 60 * static_cast<std::int64_t>(uniform_int(rng, 28000000, 29000000));
  Waypoint p{t0, signed_magnitude(rng, 5.0, 170.0), signed_magnitude(rng, 5.0, 80.0), uniform(rng, 0.0, 12000.0),
             uniform(rng, 150.0, 950.0), uniform(rng, 0.0, 360.0)};
  const double dlon = uniform(rng, -0.03, 0.03);
  const double dlat = uniform(rng, -0.03, 0.03);
  for (int i = 0; i < kInputSteps + horizon; ++i) {
    Waypoint r = round_waypoint(p);
    (i < kInputSteps ? w.inputs : w.targets).push_back(r);
    p.timestamp += kStepSeconds;
    p.longitude += dlon + uniform(rng, -0.005, 0.005);
    p.latitude += dlat + uniform(rng, -0.005, 0.005);
    p.altitude = std::max(0.0, p.altitude + uniform(rng, -100.0, 100.0));
    p.velocity = std::max(0.0, p.velocity + uniform(rng, -5.0, 5.0));
    p.heading = wrap_degrees(p.heading + uniform(rng, -3.0, 3.0));
  }
  return w;
}

/// Window on a straight constant-speed track; altitude changes by
/// `climb_per_minute` each step.
inline Window linear_window(int horizon, double lon0, double lat0, double dlon, double dlat, double alt0,
                            double climb_per_minute) {
  Window w;
  w.callsign = "LIN";
  for (int i = 0; i < kInputSteps + horizon; ++i) {
    Waypoint p{1727913600 + i * kStepSeconds, lon0 + i * dlon, lat0 + i * dlat, alt0 + i * climb_per_minute, 800.0,
               90.0};
    (i < kInputSteps ? w.inputs : w.targets).push_back(p);
  }
  return w;
}

/// Minute-aligned trajectory of `length` waypoints with random gaps of 2-5
/// minutes; roughly one adjacency in `gap_every` breaks.
inline Trajectory gappy_trajectory(Rng& rng, int length, int gap_every) {
  Trajectory t;
  t.callsign = "GAP";
  std::int64_t ts = 1727913600;
  for (int i = 0; i < length; ++i) {
    if (i > 0) ts += uniform_int(rng, 1, gap_every) == 1 ? 60 * uniform_int(rng, 2, 5) : 60;
    t.waypoints.push_back(Waypoint{ts, 100.0 + 0.1 * i, 30.0, 9000.0, 800.0, 90.0});
  }
  return t;
}

}  // namespace ftp::fixtures
