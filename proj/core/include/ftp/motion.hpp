#pragma once

namespace ftp::motion {

/// Kilometres per degree of latitude in the flat-earth step model.
inline constexpr double kKmPerDegree = 111.32;

/// Latitude beyond which the longitude step is undefined.
inline constexpr double kPolarLimit = 89.9;

struct Position {
  double longitude = 0.0;
  double latitude = 0.0;
};

/// Advances `p` along `heading_deg` (0 = north, clockwise) at `speed_kmh`
/// for `seconds`, using the cosine of the starting latitude for the
/// longitude scale. The synthetic generator and the kinematic predictor
/// both move aircraft through this function.
Position step(Position p, double speed_kmh, double heading_deg, double seconds);

/// Ground track between two positions one `seconds` apart, inverted from
/// step(): step(from, r.speed_kmh, r.heading_deg, seconds) reproduces `to`.
struct Track {
  double speed_kmh = 0.0;
  double heading_deg = 0.0;
};
Track track_between(Position from, Position to, double seconds);

}  // namespace ftp::motion
