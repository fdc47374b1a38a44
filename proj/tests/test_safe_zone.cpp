#include <doctest.h>

#include <random>

#include "dcage/errors.hpp"
#include "dcage/safe_zone.hpp"
#include "oracles.hpp"

using namespace dcage;

namespace {

std::vector<oracle::P> to_oracle(const ZonePolygon& z) {
  std::vector<oracle::P> out;
  for (const auto& v : z.vertices) out.push_back({v.x(), v.y()});
  return out;
}

double max_x(const ZonePolygon& z) {
  double m = -1e9;
  for (const auto& v : z.vertices) m = std::max(m, v.x());
  return m;
}

}  // namespace

TEST_CASE("stopping distance matches braking integration") {
  const ZoneParams p;  // react 0.2, decel 2.0
  CHECK(stopping_distance(0.0, p) == 0.0);
  CHECK(stopping_distance(2.0, p) == doctest::Approx(oracle::braking_distance_integrated(2.0, 0.2, 2.0)).epsilon(1e-6));
  CHECK(stopping_distance(3.0, p) == doctest::Approx(oracle::braking_distance_integrated(3.0, 0.2, 2.0)).epsilon(1e-6));
  CHECK(oracle::braking_distance_integrated(2.0, 0.2, 2.0) == doctest::Approx(1.4).epsilon(1e-6));
  CHECK(oracle::braking_distance_integrated(3.0, 0.2, 2.0) == doctest::Approx(2.85).epsilon(1e-6));
  CHECK_THROWS_AS(stopping_distance(-0.1, p), DomainError);
}

TEST_CASE("zero speed straight zone is the inflated footprint plus the front margin") {
  const VehicleGeometry g;
  const ZonePolygon z = compute_safe_zone(0.0, 0.0, g, ZoneParams{});
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (const auto& v : z.vertices) {
    xmin = std::min(xmin, v.x());
    xmax = std::max(xmax, v.x());
    ymin = std::min(ymin, v.y());
    ymax = std::max(ymax, v.y());
  }
  CHECK(xmin == doctest::Approx(-0.5));
  CHECK(xmax == doctest::Approx(2.0 + 0.5 + 1.0));
  CHECK(ymin == doctest::Approx(-0.9));
  CHECK(ymax == doctest::Approx(0.9));
  CHECK(z.vertices.size() >= 4);
  CHECK(signed_area(z.vertices) == doctest::Approx(4.0 * 1.8));
}

TEST_CASE("front edge at speed 2 sits 2.4 m past the bumper") {
  const ZonePolygon z = compute_safe_zone(2.0, 0.0, VehicleGeometry{}, ZoneParams{});
  CHECK(max_x(z) == doctest::Approx(2.5 + 2.4));
}

TEST_CASE("zone covers every sampled point of the swept footprint") {
  const VehicleGeometry g;
  const ZoneParams p;
  for (double speed : {0.0, 1.0, 3.0}) {
    for (double steer : {0.0, 0.3, -0.45, 0.6}) {
      const ZonePolygon z = compute_safe_zone(speed, steer, g, p);
      const double len = stopping_distance(speed, p) + p.front_margin;
      for (const auto& s : oracle::swept_samples(2.0, 1.2, 0.5, 0.5, 0.3, steer, len, 0.05, 0.15)) {
        REQUIRE_MESSAGE(contains(z, {s.x, s.y}), "speed " << speed << " steer " << steer << " at " << s.x << ","
                                                          << s.y);
      }
    }
  }
}

TEST_CASE("turning zone bends to the steering side") {
  const ZonePolygon z = compute_safe_zone(1.0, 0.3, VehicleGeometry{}, ZoneParams{});
  CHECK(centroid(z.vertices).y() > 0.0);
  CHECK(is_simple(z.vertices));
  CHECK(signed_area(z.vertices) > 0.0);
}

TEST_CASE("containment agrees with ray casting") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-3.0, 12.0), uy(-8.0, 8.0);
  for (double steer : {0.0, 0.2, -0.5}) {
    const ZonePolygon z = compute_safe_zone(2.5, steer, VehicleGeometry{}, ZoneParams{});
    const auto poly = to_oracle(z);
    for (int i = 0; i < 2000; ++i) {
      const Point2d p{ux(rng), uy(rng)};
      REQUIRE(contains(z, p) == oracle::ray_cast_inside(poly, {p.x(), p.y()}));
    }
    CHECK(contains(z, {0.0, 0.0}));
    CHECK_FALSE(contains(z, {1000.0, 0.0}));
  }
}

TEST_CASE("mirror symmetry") {
  const ZonePolygon l = compute_safe_zone(1.7, 0.25, VehicleGeometry{}, ZoneParams{});
  const ZonePolygon r = compute_safe_zone(1.7, -0.25, VehicleGeometry{}, ZoneParams{});
  const ZonePolygon m = mirror_y(l);
  REQUIRE(m.vertices.size() == r.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK((m.vertices[i] - r.vertices[i]).norm() < 1e-9);
}

TEST_CASE("invalid parameters are configuration errors") {
  ZoneParams p;
  p.arc_step = 0.6;
  CHECK_THROWS_AS(compute_safe_zone(1.0, 0.0, VehicleGeometry{}, p), ConfigError);
  p = ZoneParams{};
  p.decel_max = -1.0;
  CHECK_THROWS_AS(compute_safe_zone(1.0, 0.0, VehicleGeometry{}, p), ConfigError);
  VehicleGeometry g;
  g.wheelbase = 0.05;
  CHECK_THROWS_AS(compute_safe_zone(1.0, 0.0, g, ZoneParams{}), ConfigError);
  CHECK_THROWS_AS(compute_safe_zone(-1.0, 0.0, VehicleGeometry{}, ZoneParams{}), DomainError);
}
