#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ftp/domain.hpp"
#include "support.hpp"

using namespace ftp;

TEST(ValidateWaypoint, LatitudeOutOfRangeIsInvalid) {
  const auto v = validate_waypoint(Waypoint{0, 0, 91.0, 0, 0, 0});
  ASSERT_FALSE(v.valid());
  EXPECT_EQ(*v.violated, Bound::Latitude);
}

TEST(ValidateWaypoint, AllZeroIsValid) { EXPECT_TRUE(validate_waypoint(Waypoint{}).valid()); }

TEST(ValidateWaypoint, Heading360IsInvalid) {
  const auto v = validate_waypoint(Waypoint{0, 0, 0, 0, 0, 360.0});
  ASSERT_FALSE(v.valid());
  EXPECT_EQ(*v.violated, Bound::Heading);
}

TEST(ValidateWaypoint, BoundaryOfEveryBound) {
  const double below = std::nextafter(-180.0, -200.0);
  EXPECT_TRUE(validate_waypoint(Waypoint{0, -180, 0, 0, 0, 0}).valid());
  EXPECT_TRUE(validate_waypoint(Waypoint{0, 180, 0, 0, 0, 0}).valid());
  EXPECT_EQ(validate_waypoint(Waypoint{0, below, 0, 0, 0, 0}).violated, Bound::Longitude);
  EXPECT_EQ(validate_waypoint(Waypoint{0, std::nextafter(180.0, 200.0), 0, 0, 0, 0}).violated, Bound::Longitude);

  EXPECT_TRUE(validate_waypoint(Waypoint{0, 0, -90, 0, 0, 0}).valid());
  EXPECT_TRUE(validate_waypoint(Waypoint{0, 0, 90, 0, 0, 0}).valid());
  EXPECT_EQ(validate_waypoint(Waypoint{0, 0, std::nextafter(-90.0, -100.0), 0, 0, 0}).violated, Bound::Latitude);

  EXPECT_TRUE(validate_waypoint(Waypoint{0, 0, 0, -500, 0, 0}).valid());
  EXPECT_EQ(validate_waypoint(Waypoint{0, 0, 0, std::nextafter(-500.0, -600.0), 0, 0}).violated, Bound::Altitude);

  EXPECT_EQ(validate_waypoint(Waypoint{0, 0, 0, 0, -1e-9, 0}).violated, Bound::Velocity);

  EXPECT_TRUE(validate_waypoint(Waypoint{0, 0, 0, 0, 0, std::nextafter(360.0, 0.0)}).valid());
  EXPECT_EQ(validate_waypoint(Waypoint{0, 0, 0, 0, 0, -1e-9}).violated, Bound::Heading);
}

TEST(ValidateWaypoint, NonFiniteViolatesItsBound) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(validate_waypoint(Waypoint{0, nan, 0, 0, 0, 0}).violated, Bound::Longitude);
  EXPECT_EQ(validate_waypoint(Waypoint{0, 0, 0, std::numeric_limits<double>::infinity(), 0, 0}).violated,
            Bound::Altitude);
}

TEST(ValidateWaypoint, FirstViolatedBoundIsReported) {
  EXPECT_EQ(validate_waypoint(Waypoint{0, 0, 95, -900, 0, 400}).violated, Bound::Latitude);
}

TEST(RoundWaypoint, DocumentedExamples) {
  const Waypoint r = round_waypoint(Waypoint{1727926166, 13.611841, 50.48944, 10058.4, 968.596, 125.005});
  EXPECT_EQ(r.longitude, 13.61184);
  EXPECT_EQ(r.altitude, 10058.4);
  EXPECT_EQ(r.heading, 125.01);
  EXPECT_EQ(r.timestamp, 1727926166);
}

TEST(RoundDecimal, HalfAwayFromZeroOnDecimalValue) {
  EXPECT_EQ(round_decimal(125.005, 2), 125.01);
  EXPECT_EQ(round_decimal(-125.005, 2), -125.01);
  EXPECT_EQ(round_decimal(0.000005, 5), 0.00001);
  EXPECT_EQ(round_decimal(2.5, 0), 3.0);
  EXPECT_EQ(round_decimal(-2.5, 0), -3.0);
  EXPECT_EQ(round_decimal(1.0000049, 5), 1.0);
  EXPECT_FALSE(std::signbit(round_decimal(-0.000001, 5)));
}

TEST(RoundWaypoint, HeadingRoundingTo360Wraps) {
  EXPECT_EQ(round_waypoint(Waypoint{0, 0, 0, 0, 0, 359.996}).heading, 0.0);
}

TEST(RoundWaypoint, IdempotentOnRandomWaypoints) {
  fixtures::Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    const Waypoint w{0,
                     fixtures::uniform(rng, -180, 180),
                     fixtures::uniform(rng, -90, 90),
                     fixtures::uniform(rng, -500, 15000),
                     fixtures::uniform(rng, 0, 1200),
                     fixtures::uniform(rng, 0, 360)};
    const Waypoint once = round_waypoint(w);
    EXPECT_EQ(round_waypoint(once), once);
  }
}

TEST(CircularMean, Examples) {
  const double same[] = {90, 90};
  const double wrap[] = {350, 10};
  const double quarter[] = {0, 90};
  EXPECT_NEAR(circular_mean(same), 90.0, 1e-12);
  const double m = circular_mean(wrap);
  EXPECT_LT(std::min(m, 360.0 - m), 1e-9);
  EXPECT_NEAR(circular_mean(quarter), 45.0, 1e-12);
}

TEST(CircularMean, SingleElementUnchanged) {
  const double one[] = {123.45};
  EXPECT_EQ(circular_mean(one), 123.45);
}

TEST(CircularMean, EmptyThrows) { EXPECT_THROW(circular_mean(std::span<const double>{}), Error); }

TEST(CircularMean, RotationEquivariant) {
  fixtures::Rng rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> a(static_cast<std::size_t>(fixtures::uniform_int(rng, 1, 8)));
    const double center = fixtures::uniform(rng, 0, 360);
    for (double& x : a) x = wrap_degrees(center + fixtures::uniform(rng, -80, 80));
    const double delta = fixtures::uniform(rng, -720, 720);
    std::vector<double> b;
    for (double x : a) b.push_back(wrap_degrees(x + delta));
    const double expected = wrap_degrees(circular_mean(a) + delta);
    EXPECT_NEAR(angle_difference(circular_mean(b), expected), 0.0, 1e-9);
  }
}

TEST(ParseDecimal, AcceptsPlainDecimalsOnly) {
  EXPECT_EQ(parse_decimal("-12"), -12.0);
  EXPECT_EQ(parse_decimal(" 3.5 "), 3.5);
  EXPECT_EQ(parse_decimal("+.25"), 0.25);
  EXPECT_FALSE(parse_decimal("1e5"));
  EXPECT_FALSE(parse_decimal("nan"));
  EXPECT_FALSE(parse_decimal(""));
  EXPECT_FALSE(parse_decimal("1.2.3"));
  EXPECT_FALSE(parse_decimal("-"));
}

TEST(Angles, WrapAndDifference) {
  EXPECT_EQ(wrap_degrees(-10), 350);
  EXPECT_EQ(wrap_degrees(720), 0);
  EXPECT_EQ(angle_difference(10, 350), 20);
  EXPECT_EQ(angle_difference(350, 10), -20);
  EXPECT_EQ(angle_difference(180, 0), -180);
}

TEST(PhaseLabel, StringRoundTrip) {
  for (PhaseLabel p : kPhases) EXPECT_EQ(parse_phase(to_string(p)), p);
  EXPECT_FALSE(parse_phase("taxi"));
}
