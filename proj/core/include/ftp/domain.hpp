#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ftp {

/// Error raised by library operations whose contract allows failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of history waypoints fed to every predictor.
inline constexpr int kInputSteps = 16;

/// Seconds between consecutive minute-aggregated waypoints.
inline constexpr std::int64_t kStepSeconds = 60;

/// One timestamped aircraft state sample.
///
/// Units: degrees for longitude/latitude/heading, meters for altitude,
/// kilometers per hour for velocity. Heading is clockwise from north in
/// [0, 360).
struct Waypoint {
  std::int64_t timestamp = 0;
  double longitude = 0.0;
  double latitude = 0.0;
  double altitude = 0.0;
  double velocity = 0.0;
  double heading = 0.0;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/// The five predicted attributes of a waypoint, in serialization order.
enum class Attribute { Longitude, Latitude, Altitude, Velocity, Heading };

inline constexpr Attribute kAttributes[] = {Attribute::Longitude, Attribute::Latitude,
                                            Attribute::Altitude, Attribute::Velocity,
                                            Attribute::Heading};
inline constexpr int kAttributeCount = 5;

/// Canonical decimal places per attribute: 5, 5, 3, 3, 2.
int canonical_decimals(Attribute a);
std::string_view to_string(Attribute a);
double attribute_value(const Waypoint& w, Attribute a);
void set_attribute(Waypoint& w, Attribute a, double value);

struct Trajectory {
  std::string callsign;
  std::vector<Waypoint> waypoints;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class PhaseLabel { TakeOff, Cruise, Landing };

inline constexpr PhaseLabel kPhases[] = {PhaseLabel::TakeOff, PhaseLabel::Cruise,
                                         PhaseLabel::Landing};

std::string_view to_string(PhaseLabel p);
std::optional<PhaseLabel> parse_phase(std::string_view s);

/// Sixteen history waypoints followed immediately by `targets.size()` future
/// waypoints from the same trajectory.
struct Window {
  std::string callsign;
  std::vector<Waypoint> inputs;
  std::vector<Waypoint> targets;
  std::optional<PhaseLabel> phase;

  int horizon() const { return static_cast<int>(targets.size()); }
  const Waypoint& last_input() const { return inputs.back(); }

  friend bool operator==(const Window&, const Window&) = default;
};

/// Which bound a waypoint violates, if any.
enum class Bound { Longitude, Latitude, Altitude, Velocity, Heading };

std::string_view to_string(Bound b);

struct Validity {
  std::optional<Bound> violated;

  bool valid() const { return !violated.has_value(); }
  explicit operator bool() const { return valid(); }
};

inline constexpr double kMinAltitude = -500.0;

/// Checks the waypoint against the accepted state box. Non-finite values
/// violate their bound. Bounds are checked in attribute order.
Validity validate_waypoint(const Waypoint& w);

/// Rounds `value` half away from zero at `decimals` places, treating the
/// input as its shortest round-trip decimal representation (so 125.005
/// rounds to 125.01 even though its binary value is slightly below).
double round_decimal(double value, int decimals);

/// Rounds every attribute to its canonical precision. A heading that rounds
/// up to 360 wraps to 0.
Waypoint round_waypoint(const Waypoint& w);

/// Mean direction of `angles_deg` in [0, 360). Throws Error on empty input.
double circular_mean(std::span<const double> angles_deg);

/// Parses a signed base-10 decimal ("-12", "3.5", "+.25") with optional
/// surrounding whitespace. No exponents, no inf/nan.
std::optional<double> parse_decimal(std::string_view text);

/// Maps any finite angle into [0, 360).
double wrap_degrees(double deg);

/// Signed smallest rotation from `from` to `to`, in [-180, 180).
double angle_difference(double to, double from);

}  // namespace ftp
