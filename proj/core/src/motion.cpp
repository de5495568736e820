#include "ftp/motion.hpp"

#include <cmath>
#include <numbers>

namespace ftp::motion {

namespace {
constexpr double kRad = std::numbers::pi / 180.0;
}

Position step(Position p, double speed_kmh, double heading_deg, double seconds) {
  const double km = speed_kmh * seconds / 3600.0;
  const double theta = heading_deg * kRad;
  return Position{
      p.longitude + km * std::sin(theta) / (kKmPerDegree * std::cos(p.latitude * kRad)),
      p.latitude + km * std::cos(theta) / kKmPerDegree,
  };
}

Track track_between(Position from, Position to, double seconds) {
  const double north_km = (to.latitude - from.latitude) * kKmPerDegree;
  const double east_km = (to.longitude - from.longitude) * kKmPerDegree * std::cos(from.latitude * kRad);
  const double km = std::hypot(north_km, east_km);
  double heading = km == 0.0 ? 0.0 : std::atan2(east_km, north_km) / kRad;
  if (heading < 0.0) heading += 360.0;
  return Track{km * 3600.0 / seconds, heading};
}

}  // namespace ftp::motion
