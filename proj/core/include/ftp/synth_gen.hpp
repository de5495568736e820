#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ftp/adsb_ingest.hpp"
#include "ftp/domain.hpp"

namespace ftp::synth {

/// Linear heading ramp of `delta_deg` starting `minute` minutes after
/// departure and lasting `duration_minutes`.
struct TurnEvent {
  double minute = 0.0;
  double delta_deg = 0.0;
  double duration_minutes = 1.0;

  friend bool operator==(const TurnEvent&, const TurnEvent&) = default;
};

/// Scripted loss of `drop_m` metres during cruise; the aircraft stays at
/// the lower level afterwards. `minute` counts from the start of cruise.
struct AltitudeDrop {
  double minute = 0.0;
  double drop_m = 0.0;
  double duration_minutes = 1.0;

  friend bool operator==(const AltitudeDrop&, const AltitudeDrop&) = default;
};

/// Take-off starts from this speed and altitude; landing ends there.
inline constexpr double kGroundSpeedKmh = 300.0;
inline constexpr double kTakeoffAltitude = 0.0;
inline constexpr double kLandingAltitude = 100.0;

struct FlightSpec {
  std::uint64_t seed = 0;
  std::string callsign = "SYN0000";
  /// Unix time of the first sample.
  std::int64_t start_time = 1727913600;
  double origin_longitude = 113.3;
  double origin_latitude = 23.4;
  double initial_heading = 0.0;
  double cruise_altitude = 10000.0;
  double cruise_speed = 850.0;
  double climb_rate = 600.0;    // m/min
  double descent_rate = 450.0;  // m/min
  double cruise_minutes = 60.0;
  std::vector<TurnEvent> turns;
  std::optional<AltitudeDrop> drop;
  /// Standard deviation of the Gaussian noise added to each emitted
  /// longitude, latitude, altitude, velocity and heading.
  std::array<double, kAttributeCount> noise_std{};
  double sample_interval = 10.0;
  bool include_takeoff = true;
  bool include_landing = true;

  /// Throws Error naming the first out-of-range field.
  void validate() const;

  friend bool operator==(const FlightSpec&, const FlightSpec&) = default;
};

/// Noise-free-or-noisy samples without rounding, one per sample interval,
/// from take-off (or cruise) through landing (or end of cruise).
Trajectory simulate_flight(const FlightSpec& spec);

/// simulate_flight as ADS-B records, canonically rounded.
std::vector<adsb::RawRecord> generate_flight(const FlightSpec& spec);

/// Spec for flight `index` of a corpus: seed base_seed + index, airliner
/// envelope (cruise 8000-12000 m at 700-950 km/h), random turns, the
/// occasional altitude drop and light sensor noise.
FlightSpec random_spec(std::uint64_t base_seed, std::size_t index);

struct Corpus {
  std::uint64_t base_seed = 0;
  std::vector<FlightSpec> specs;
  std::vector<adsb::RawRecord> records;
};

/// Throws Error when count is 0.
Corpus generate_corpus(std::size_t count, std::uint64_t base_seed);

/// Records for every spec, in order.
std::vector<adsb::RawRecord> regenerate(std::span<const FlightSpec> specs);

/// JSON manifest listing every spec of a corpus.
std::string manifest_json(const Corpus& corpus);
/// Throws Error on a malformed manifest. Records are not regenerated.
Corpus parse_manifest(std::string_view text);

}  // namespace ftp::synth
