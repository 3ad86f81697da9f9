#include <cmath>
#include <random>

#include "doctest.h"
#include "rfl/errors.hpp"
#include "rfl/geometry.hpp"
#include "rfl/rng.hpp"

using namespace rfl;

namespace {

PlaneSegment axis_plane() {
  PlaneSegment p;
  p.center = {0, 0, -2};
  p.normal = {0, 0, 1};
  p.up = {0, 1, 0};
  p.width = 4;
  p.height = 4;
  return p;
}

Vec3 random_unit(std::mt19937_64& g) {
  // rejection sample inside the ball, then normalize
  for (;;) {
    const Vec3 v{uniform_in(g, -1, 1), uniform_in(g, -1, 1), uniform_in(g, -1, 1)};
    const double n = norm(v);
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

}  // namespace

TEST_CASE("intersect_segment: head-on hit") {
  const auto hit = intersect_segment(Ray{{0, 0, 0}, {0, 0, -1}}, axis_plane());
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(2.0));
  CHECK(norm(hit->point - Vec3{0, 0, -2}) < 1e-12);
  CHECK(hit->uv.x == doctest::Approx(0.0));
  CHECK(hit->uv.y == doctest::Approx(0.0));
}

TEST_CASE("intersect_segment: plane behind origin") {
  CHECK(!intersect_segment(Ray{{0, 0, -3}, {0, 0, -1}}, axis_plane()).has_value());
}

TEST_CASE("intersect_segment: oblique hit") {
  const auto hit = intersect_segment(Ray{{0, 0, 0}, {3.0 / 5, 0, -4.0 / 5}}, axis_plane());
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(2.5));
  CHECK(norm(hit->point - Vec3{1.5, 0, -2}) < 1e-12);
  CHECK(hit->uv.x == doctest::Approx(1.5));
  CHECK(hit->uv.y == doctest::Approx(0.0));
}

TEST_CASE("intersect_segment: parallel and outside-extent rays miss") {
  CHECK(!intersect_segment(Ray{{0, 0, 0}, {1, 0, 0}}, axis_plane()).has_value());
  // lateral offset beyond w/2
  CHECK(!intersect_segment(Ray{{3, 0, 0}, {0, 0, -1}}, axis_plane()).has_value());
}

TEST_CASE("nearest_hit: min-t selection and empty list") {
  PlaneSegment near_plane = axis_plane();
  PlaneSegment far_plane = axis_plane();
  far_plane.center = {0, 0, -5};
  const std::vector<PlaneSegment> planes{far_plane, near_plane};
  const auto hit = nearest_hit(Ray{{0, 0, 0}, {0, 0, -1}}, planes);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(2.0));
  CHECK(hit->plane_index == 1);

  CHECK(!nearest_hit(Ray{{0, 0, 0}, {0, 0, -1}}, std::vector<PlaneSegment>{}).has_value());
}

TEST_CASE("nearest_hit: laterally missed near plane falls through to far plane") {
  PlaneSegment near_plane = axis_plane();
  near_plane.width = 0.5;  // ray at x=1 misses this one
  PlaneSegment far_plane = axis_plane();
  far_plane.center = {0, 0, -5};
  const std::vector<PlaneSegment> planes{near_plane, far_plane};
  const auto hit = nearest_hit(Ray{{1, 0, 0}, {0, 0, -1}}, planes);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(5.0));
  CHECK(hit->plane_index == 1);
}

TEST_CASE("nearest_hit matches brute force over random planes") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PlaneSegment> planes;
    const int n = 1 + uniform_int(rng, 4);
    for (int i = 0; i < n; ++i) {
      PlaneSegment p;
      p.center = {uniform_in(rng, -2, 2), uniform_in(rng, -2, 2), uniform_in(rng, -2, 2)};
      p.normal = random_unit(rng);
      p.up = normalized(random_unit(rng) - dot(random_unit(rng), p.normal) * p.normal);
      orthonormalize(p);
      p.width = uniform_in(rng, 0.5, 4);
      p.height = uniform_in(rng, 0.5, 4);
      planes.push_back(p);
    }
    const Ray ray{{uniform_in(rng, -3, 3), uniform_in(rng, -3, 3), uniform_in(rng, -3, 3)},
                  random_unit(rng)};
    const auto fast = nearest_hit(ray, planes);

    std::optional<PlaneHit> brute;
    for (int i = 0; i < n; ++i) {
      const auto h = intersect_segment(ray, planes[i], i);
      if (h && (!brute || h->t < brute->t)) brute = h;
    }
    CHECK(fast.has_value() == brute.has_value());
    if (fast && brute) {
      CHECK(fast->t == doctest::Approx(brute->t));
      CHECK(fast->plane_index == brute->plane_index);
    }
  }
}

TEST_CASE("reflect_direction: canonical cases") {
  CHECK(norm(reflect_direction({0, 0, -1}, {0, 0, 1}) - Vec3{0, 0, 1}) < 1e-15);
  CHECK(norm(reflect_direction({0.6, 0, -0.8}, {0, 0, 1}) - Vec3{0.6, 0, 0.8}) < 1e-15);
  CHECK(norm(reflect_direction({1, 0, 0}, {0, 0, 1}) - Vec3{1, 0, 0}) < 1e-15);
}

TEST_CASE("reflect_direction: involution and mirror law on random cases") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 d = random_unit(rng);
    const Vec3 n = random_unit(rng);
    const Vec3 r = reflect_direction(d, n);
    CHECK(std::abs(norm(r) - 1.0) < 1e-9);
    CHECK(norm(reflect_direction(r, n) - d) < 1e-9);            // involution
    CHECK(std::abs(dot(r, n) + dot(d, n)) < 1e-9);              // mirror law
    const Vec3 diff = r - d;                                    // parallel to n
    CHECK(norm(diff - dot(diff, n) * n) < 1e-9);
  }
}

TEST_CASE("spawn_reflected_ray: offset origin and orientation invariance") {
  const PlaneHit hit{2.0, {0, 0, -2}, {0, 0}, 0};
  const Ray r1 = spawn_reflected_ray(hit, {0, 0, -1}, {0, 0, 1});
  CHECK(norm(r1.origin - Vec3{0, 0, -1.9999}) < 1e-12);
  CHECK(norm(r1.dir - Vec3{0, 0, 1}) < 1e-12);

  const Ray r2 = spawn_reflected_ray(hit, {0, 0, -1}, {0, 0, -1});
  CHECK(norm(r2.origin - r1.origin) < 1e-15);
  CHECK(norm(r2.dir - r1.dir) < 1e-15);
}

TEST_CASE("spawn_reflected_ray: oblique case composes with intersect_segment") {
  const Vec3 d{3.0 / 5, 0, -4.0 / 5};
  const auto hit = intersect_segment(Ray{{0, 0, 0}, d}, axis_plane());
  REQUIRE(hit.has_value());
  const Ray refl = spawn_reflected_ray(*hit, d, {0, 0, 1});
  CHECK(norm(refl.dir - Vec3{0.6, 0, 0.8}) < 1e-12);
  CHECK(refl.origin.x == doctest::Approx(1.5 + 0.6e-4));
  CHECK(refl.origin.z == doctest::Approx(-2.0 + 0.8e-4));
}

TEST_CASE("intersection residual: returned points lie on the plane") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    PlaneSegment p;
    p.center = {uniform_in(rng, -2, 2), uniform_in(rng, -2, 2), uniform_in(rng, -2, 2)};
    p.normal = random_unit(rng);
    p.up = Vec3{0, 1, 0};
    if (std::abs(dot(p.up, p.normal)) > 0.95) p.up = Vec3{1, 0, 0};
    orthonormalize(p);
    p.width = 5;
    p.height = 5;
    const Ray ray{{uniform_in(rng, -4, 4), uniform_in(rng, -4, 4), uniform_in(rng, -4, 4)},
                  random_unit(rng)};
    const auto hit = intersect_segment(ray, p);
    if (!hit) continue;
    CHECK(std::abs(dot(hit->point - p.center, p.normal)) < 1e-7);
    CHECK(norm(hit->point - (ray.origin + hit->t * ray.dir)) < 1e-7);
  }
}

TEST_CASE("fit_plane: unit square corners") {
  const std::vector<Vec3> pts{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  const PlaneSegment p = fit_plane(pts);
  CHECK(norm(p.center - Vec3{0.5, 0.5, 1}) < 1e-12);
  CHECK(std::abs(std::abs(p.normal.z) - 1.0) < 1e-9);
  CHECK(p.width == doctest::Approx(1.05));
  CHECK(p.height == doctest::Approx(1.05));
  CHECK(std::abs(dot(p.normal, p.up)) < 1e-9);
}

TEST_CASE("fit_plane: noisy square recovers the normal") {
  std::mt19937_64 rng(11);
  std::vector<Vec3> pts{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  for (Vec3& p : pts)
    p += Vec3{uniform_in(rng, -1e-6, 1e-6), uniform_in(rng, -1e-6, 1e-6),
              uniform_in(rng, -1e-6, 1e-6)};
  const PlaneSegment fitted = fit_plane(pts);
  const double cos_angle = std::abs(dot(fitted.normal, Vec3{0, 0, 1}));
  CHECK(std::acos(std::min(1.0, cos_angle)) < 1e-4);
}

TEST_CASE("fit_plane: degenerate input") {
  CHECK_THROWS_AS(fit_plane(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}}), DegenerateInput);
  CHECK_THROWS_AS(fit_plane(std::vector<Vec3>{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}}),
                  DegenerateInput);
}

TEST_CASE("fit_plane: exact planar points reproduce the generating normal") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 n = random_unit(rng);
    Vec3 u = random_unit(rng);
    u = normalized(u - dot(u, n) * n);
    const Vec3 s = cross(u, n);
    const Vec3 c{uniform_in(rng, -2, 2), uniform_in(rng, -2, 2), uniform_in(rng, -2, 2)};
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i)
      pts.push_back(c + uniform_in(rng, -1, 1) * s + uniform_in(rng, -1, 1) * u);
    const PlaneSegment fitted = fit_plane(pts);
    const double cos_angle = std::min(1.0, std::abs(dot(fitted.normal, n)));
    CHECK(std::acos(cos_angle) < 1e-6);
  }
}

TEST_CASE("orthonormalize restores invariants") {
  PlaneSegment p = axis_plane();
  p.normal = {0.1, 0.2, 1.4};
  p.up = {0.3, 1.1, 0.2};
  orthonormalize(p);
  CHECK(std::abs(norm(p.normal) - 1.0) < 1e-12);
  CHECK(std::abs(norm(p.up) - 1.0) < 1e-12);
  CHECK(std::abs(dot(p.normal, p.up)) < 1e-12);
}
