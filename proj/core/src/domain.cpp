#include "ftp/domain.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace ftp {

int canonical_decimals(Attribute a) {
  switch (a) {
    case Attribute::Longitude:
    case Attribute::Latitude:
      return 5;
    case Attribute::Altitude:
    case Attribute::Velocity:
      return 3;
    case Attribute::Heading:
      return 2;
  }
  return 0;
}

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::Longitude: return "longitude";
    case Attribute::Latitude: return "latitude";
    case Attribute::Altitude: return "altitude";
    case Attribute::Velocity: return "velocity";
    case Attribute::Heading: return "heading";
  }
  return "?";
}

double attribute_value(const Waypoint& w, Attribute a) {
  switch (a) {
    case Attribute::Longitude: return w.longitude;
    case Attribute::Latitude: return w.latitude;
    case Attribute::Altitude: return w.altitude;
    case Attribute::Velocity: return w.velocity;
    case Attribute::Heading: return w.heading;
  }
  return 0.0;
}

void set_attribute(Waypoint& w, Attribute a, double value) {
  switch (a) {
    case Attribute::Longitude: w.longitude = value; break;
    case Attribute::Latitude: w.latitude = value; break;
    case Attribute::Altitude: w.altitude = value; break;
    case Attribute::Velocity: w.velocity = value; break;
    case Attribute::Heading: w.heading = value; break;
  }
}

std::string_view to_string(PhaseLabel p) {
  switch (p) {
    case PhaseLabel::TakeOff: return "takeoff";
    case PhaseLabel::Cruise: return "cruise";
    case PhaseLabel::Landing: return "landing";
  }
  return "?";
}

std::optional<PhaseLabel> parse_phase(std::string_view s) {
  for (PhaseLabel p : kPhases) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::string_view to_string(Bound b) {
  switch (b) {
    case Bound::Longitude: return "longitude out of range";
    case Bound::Latitude: return "latitude out of range";
    case Bound::Altitude: return "altitude out of range";
    case Bound::Velocity: return "velocity out of range";
    case Bound::Heading: return "heading out of range";
  }
  return "?";
}

Validity validate_waypoint(const Waypoint& w) {
  auto in = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
  if (!in(w.longitude, -180.0, 180.0)) return {Bound::Longitude};
  if (!in(w.latitude, -90.0, 90.0)) return {Bound::Latitude};
  if (!std::isfinite(w.altitude) || w.altitude < kMinAltitude) return {Bound::Altitude};
  if (!std::isfinite(w.velocity) || w.velocity < 0.0) return {Bound::Velocity};
  if (!std::isfinite(w.heading) || w.heading < 0.0 || w.heading >= 360.0) return {Bound::Heading};
  return {};
}

double round_decimal(double value, int decimals) {
  if (!std::isfinite(value)) return value;
  std::array<char, 400> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
  if (ec != std::errc{}) return value;
  std::string_view text(buf.data(), static_cast<std::size_t>(end - buf.data()));

  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (frac.size() <= static_cast<std::size_t>(decimals)) return value + 0.0;

  std::string digits(whole);
  digits.append(frac.substr(0, static_cast<std::size_t>(decimals)));
  if (frac[static_cast<std::size_t>(decimals)] >= '5') {
    int i = static_cast<int>(digits.size()) - 1;
    for (; i >= 0; --i) {
      if (digits[static_cast<std::size_t>(i)] == '9') {
        digits[static_cast<std::size_t>(i)] = '0';
      } else {
        ++digits[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) digits.insert(digits.begin(), '1');
  }
  std::string out = negative ? "-" : "";
  const std::size_t int_len = digits.size() - static_cast<std::size_t>(decimals);
  out.append(digits, 0, int_len);
  if (decimals > 0) {
    out.push_back('.');
    out.append(digits, int_len);
  }
  double result = 0.0;
  std::from_chars(out.data(), out.data() + out.size(), result);
  // Collapse -0.0 so that serialization never prints a negative zero.
  return result + 0.0;
}

Waypoint round_waypoint(const Waypoint& w) {
  Waypoint r = w;
  for (Attribute a : kAttributes) {
    set_attribute(r, a, round_decimal(attribute_value(w, a), canonical_decimals(a)));
  }
  if (r.heading >= 360.0) r.heading -= 360.0;
  return r;
}

std::optional<double> parse_decimal(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  std::string_view body = text;
  if (!body.empty() && (body.front() == '+' || body.front() == '-')) body.remove_prefix(1);
  std::size_t digits = 0;
  bool dot = false;
  for (char c : body) {
    if (c >= '0' && c <= '9') {
      ++digits;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      return std::nullopt;
    }
  }
  if (digits == 0) return std::nullopt;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  return r;
}

double angle_difference(double to, double from) {
  double d = std::fmod(to - from + 180.0, 360.0);
  if (d < 0.0) d += 360.0;
  return d - 180.0;
}

double circular_mean(std::span<const double> angles_deg) {
  if (angles_deg.empty()) throw Error("circular_mean: empty input");
  if (angles_deg.size() == 1) return angles_deg.front();
  constexpr double kRad = std::numbers::pi / 180.0;
  double s = 0.0;
  double c = 0.0;
  for (double a : angles_deg) {
    s += std::sin(a * kRad);
    c += std::cos(a * kRad);
  }
  const auto n = static_cast<double>(angles_deg.size());
  return wrap_degrees(std::atan2(s / n, c / n) / kRad);
}

}  // namespace ftp
