#include "ftp/synth_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "ftp/motion.hpp"

namespace ftp::synth {

namespace {

void require(bool ok, std::string_view field, std::string_view rule) {
  if (!ok) throw Error(fmt::format("invalid flight spec: {} {}", field, rule));
}

}  // namespace

void FlightSpec::validate() const {
  require(!callsign.empty(), "callsign", "must not be empty");
  require(std::isfinite(origin_longitude) && origin_longitude >= -180.0 && origin_longitude <= 180.0,
          "origin_longitude", "must be in [-180, 180]");
  require(std::isfinite(origin_latitude) && std::abs(origin_latitude) < motion::kPolarLimit, "origin_latitude",
          "must be within the polar limit");
  require(std::isfinite(initial_heading), "initial_heading", "must be finite");
  require(cruise_altitude > kLandingAltitude, "cruise_altitude", "must be above the landing altitude");
  require(cruise_speed > kGroundSpeedKmh, "cruise_speed", "must exceed the take-off speed");
  require(climb_rate > 0.0, "climb_rate", "must be > 0");
  require(descent_rate > 0.0, "descent_rate", "must be > 0");
  require(cruise_minutes >= 1.0, "cruise_minutes", "must be >= 1");
  require(sample_interval > 0.0 && sample_interval <= 60.0, "sample_interval", "must be in (0, 60]");
  for (double s : noise_std) require(s >= 0.0 && std::isfinite(s), "noise_std", "must be >= 0");
  for (const TurnEvent& t : turns) {
    require(t.minute >= 0.0, "turns.minute", "must be >= 0");
    require(t.duration_minutes >= 1.0, "turns.duration_minutes", "must be >= 1");
    require(std::isfinite(t.delta_deg), "turns.delta_deg", "must be finite");
  }
  if (drop) {
    require(drop->minute >= 0.0 && drop->minute < cruise_minutes, "drop.minute", "must fall within cruise");
    require(drop->duration_minutes >= 1.0, "drop.duration_minutes", "must be >= 1");
    require(drop->drop_m > 0.0 && drop->drop_m < cruise_altitude - kLandingAltitude, "drop.drop_m",
            "must be > 0 and leave the aircraft above the landing altitude");
  }
}

namespace {

double ramp(double x, double start, double length) { return std::clamp((x - start) / length, 0.0, 1.0); }

struct Profile {
  const FlightSpec& spec;
  double climb_s = 0.0;
  double cruise_s = 0.0;
  double descent_s = 0.0;
  double level_end = 0.0;

  explicit Profile(const FlightSpec& s) : spec(s) {
    climb_s = s.include_takeoff ? (s.cruise_altitude - kTakeoffAltitude) / s.climb_rate * 60.0 : 0.0;
    cruise_s = s.cruise_minutes * 60.0;
    level_end = s.cruise_altitude - (s.drop ? s.drop->drop_m : 0.0);
    descent_s = s.include_landing ? (level_end - kLandingAltitude) / s.descent_rate * 60.0 : 0.0;
  }

  double total() const { return climb_s + cruise_s + descent_s; }

  double altitude(double t) const {
    if (t < climb_s) return kTakeoffAltitude + spec.climb_rate * t / 60.0;
    if (t <= climb_s + cruise_s) {
      if (!spec.drop) return spec.cruise_altitude;
      const double minute = (t - climb_s) / 60.0;
      return spec.cruise_altitude - spec.drop->drop_m * ramp(minute, spec.drop->minute, spec.drop->duration_minutes);
    }
    return std::max(kLandingAltitude, level_end - spec.descent_rate * (t - climb_s - cruise_s) / 60.0);
  }

  double speed(double t) const {
    if (t < climb_s) return kGroundSpeedKmh + (spec.cruise_speed - kGroundSpeedKmh) * t / climb_s;
    if (t <= climb_s + cruise_s) return spec.cruise_speed;
    return spec.cruise_speed + (kGroundSpeedKmh - spec.cruise_speed) * ramp(t, climb_s + cruise_s, descent_s);
  }

  double heading(double t) const {
    double h = spec.initial_heading;
    for (const TurnEvent& e : spec.turns) h += e.delta_deg * ramp(t / 60.0, e.minute, e.duration_minutes);
    return wrap_degrees(h);
  }
};

}  // namespace

Trajectory simulate_flight(const FlightSpec& spec) {
  spec.validate();
  const Profile profile(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Trajectory traj;
  traj.callsign = spec.callsign;
  motion::Position pos{spec.origin_longitude, spec.origin_latitude};
  const double end = profile.total();
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * spec.sample_interval;
    if (t > end + 1e-9) break;
    Waypoint w{spec.start_time + static_cast<std::int64_t>(std::llround(t)),
               pos.longitude,
               pos.latitude,
               profile.altitude(t),
               profile.speed(t),
               profile.heading(t)};
    for (Attribute a : kAttributes) {
      const double sd = spec.noise_std[static_cast<std::size_t>(a)];
      if (sd > 0.0) set_attribute(w, a, attribute_value(w, a) + sd * gauss(rng));
    }
    w.heading = wrap_degrees(w.heading);
    traj.waypoints.push_back(w);
    pos = motion::step(pos, profile.speed(t), profile.heading(t), spec.sample_interval);
  }
  return traj;
}

std::vector<adsb::RawRecord> generate_flight(const FlightSpec& spec) {
  Trajectory traj = simulate_flight(spec);
  for (Waypoint& w : traj.waypoints) w = round_waypoint(w);
  return adsb::to_records({traj});
}

FlightSpec random_spec(std::uint64_t base_seed, std::size_t index) {
  FlightSpec s;
  s.seed = base_seed + index;
  std::mt19937_64 rng(s.seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  s.callsign = fmt::format("SYN{:04d}", index);
  s.start_time = 1727913600 + static_cast<std::int64_t>(index) * 600 + integer(0, 59);
  s.origin_longitude = uniform(100.0, 120.0);
  s.origin_latitude = uniform(20.0, 40.0);
  s.initial_heading = uniform(0.0, 360.0);
  s.cruise_altitude = std::round(uniform(8000.0, 12000.0) / 10.0) * 10.0;
  s.cruise_speed = uniform(700.0, 950.0);
  s.climb_rate = uniform(500.0, 900.0);
  s.descent_rate = uniform(300.0, 600.0);
  s.cruise_minutes = integer(40, 90);

  const double climb_minutes = s.cruise_altitude / s.climb_rate;
  const int turn_count = integer(0, 3);
  for (int i = 0; i < turn_count; ++i) {
    const double magnitude = uniform(10.0, 60.0);
    TurnEvent t;
    t.minute = std::round(uniform(2.0, climb_minutes + s.cruise_minutes));
    t.delta_deg = integer(0, 1) == 0 ? -magnitude : magnitude;
    t.duration_minutes = integer(1, 4);
    s.turns.push_back(t);
  }
  if (uniform(0.0, 1.0) < 0.15) {
    s.drop = AltitudeDrop{std::round(uniform(5.0, s.cruise_minutes - 5.0)), std::round(uniform(200.0, 800.0)),
                          static_cast<double>(integer(1, 2))};
  }
  s.noise_std = {1e-4, 1e-4, 3.0, 2.0, 0.3};
  return s;
}

std::vector<adsb::RawRecord> regenerate(std::span<const FlightSpec> specs) {
  std::vector<adsb::RawRecord> out;
  for (const FlightSpec& s : specs) {
    auto r = generate_flight(s);
    out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  return out;
}

Corpus generate_corpus(std::size_t count, std::uint64_t base_seed) {
  if (count == 0) throw Error("corpus needs at least one flight");
  Corpus c;
  c.base_seed = base_seed;
  for (std::size_t i = 0; i < count; ++i) c.specs.push_back(random_spec(base_seed, i));
  c.records = regenerate(c.specs);
  return c;
}

namespace {

using json = nlohmann::ordered_json;

json to_json(const FlightSpec& s) {
  json turns = json::array();
  for (const TurnEvent& t : s.turns) {
    turns.push_back(json{{"minute", t.minute}, {"delta_deg", t.delta_deg}, {"duration_minutes", t.duration_minutes}});
  }
  json j{{"seed", s.seed},
         {"callsign", s.callsign},
         {"start_time", s.start_time},
         {"origin_longitude", s.origin_longitude},
         {"origin_latitude", s.origin_latitude},
         {"initial_heading", s.initial_heading},
         {"cruise_altitude", s.cruise_altitude},
         {"cruise_speed", s.cruise_speed},
         {"climb_rate", s.climb_rate},
         {"descent_rate", s.descent_rate},
         {"cruise_minutes", s.cruise_minutes},
         {"turns", std::move(turns)},
         {"drop", nullptr},
         {"noise_std", s.noise_std},
         {"sample_interval", s.sample_interval},
         {"include_takeoff", s.include_takeoff},
         {"include_landing", s.include_landing}};
  if (s.drop) {
    j["drop"] = json{{"minute", s.drop->minute},
                     {"drop_m", s.drop->drop_m},
                     {"duration_minutes", s.drop->duration_minutes}};
  }
  return j;
}

FlightSpec spec_from_json(const json& j) {
  FlightSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.callsign = j.at("callsign").get<std::string>();
  s.start_time = j.at("start_time").get<std::int64_t>();
  s.origin_longitude = j.at("origin_longitude").get<double>();
  s.origin_latitude = j.at("origin_latitude").get<double>();
  s.initial_heading = j.at("initial_heading").get<double>();
  s.cruise_altitude = j.at("cruise_altitude").get<double>();
  s.cruise_speed = j.at("cruise_speed").get<double>();
  s.climb_rate = j.at("climb_rate").get<double>();
  s.descent_rate = j.at("descent_rate").get<double>();
  s.cruise_minutes = j.at("cruise_minutes").get<double>();
  for (const json& t : j.at("turns")) {
    s.turns.push_back(TurnEvent{t.at("minute").get<double>(), t.at("delta_deg").get<double>(),
                                t.at("duration_minutes").get<double>()});
  }
  if (const json& d = j.at("drop"); !d.is_null()) {
    s.drop = AltitudeDrop{d.at("minute").get<double>(), d.at("drop_m").get<double>(),
                          d.at("duration_minutes").get<double>()};
  }
  s.noise_std = j.at("noise_std").get<std::array<double, kAttributeCount>>();
  s.sample_interval = j.at("sample_interval").get<double>();
  s.include_takeoff = j.at("include_takeoff").get<bool>();
  s.include_landing = j.at("include_landing").get<bool>();
  s.validate();
  return s;
}

}  // namespace

std::string manifest_json(const Corpus& corpus) {
  json flights = json::array();
  for (const FlightSpec& s : corpus.specs) flights.push_back(to_json(s));
  json j{{"generator", "ftp-synth"}, {"version", 1}, {"base_seed", corpus.base_seed}, {"flights", std::move(flights)}};
  return j.dump(2) + "\n";
}

Corpus parse_manifest(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("generator") != "ftp-synth" || j.at("version") != 1) throw Error("unsupported synth manifest");
    Corpus c;
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    for (const json& f : j.at("flights")) c.specs.push_back(spec_from_json(f));
    return c;
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed synth manifest: {}", e.what()));
  }
}

}  // namespace ftp::synth
