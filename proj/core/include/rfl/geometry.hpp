#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rfl/vec.hpp"

namespace rfl {

// A ray is treated as parallel to a plane when |d.n| falls below this.
inline constexpr double kParallelEps = 1e-8;
// Offset along the reflected direction that keeps the spawned ray from
// re-hitting its own plane.
inline constexpr double kReflectOffset = 1e-4;

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

// Finite rectangular reflector: center p, unit normal n, unit in-plane up u
// (n.u = 0), extents w x h. The in-plane x axis is cross(u, n).
struct PlaneSegment {
  Vec3 center;
  Vec3 normal;
  Vec3 up;
  double width = 1.0;
  double height = 1.0;

  Vec3 side() const { return cross(up, normal); }
};

struct PlaneHit {
  double t = 0.0;
  Vec3 point;
  Vec2 uv;  // in-plane coordinates relative to center, |uv.x| <= w/2, |uv.y| <= h/2
  int plane_index = 0;
};

// Ray/segment intersection. Empty when t <= 0, when the ray is parallel to
// the plane, or when the intersection lies outside the finite extents.
std::optional<PlaneHit> intersect_segment(const Ray& ray, const PlaneSegment& plane,
                                          int plane_index = 0);

// Minimum-t valid segment hit over all planes; empty when none hit.
std::optional<PlaneHit> nearest_hit(const Ray& ray, std::span<const PlaneSegment> planes);

// Law of reflection: d' = d - 2(d.n)n for unit d, n.
Vec3 reflect_direction(const Vec3& d, const Vec3& n);

// Reflected ray from a hit. The normal is re-oriented so the incident ray
// satisfies d.n < 0; the origin is nudged by kReflectOffset along d'.
Ray spawn_reflected_ray(const PlaneHit& hit, const Vec3& d, const Vec3& n);

// Least-squares plane through >= 3 non-collinear points: centroid center,
// smallest-covariance-eigenvector normal, up = world-up projected into the
// plane, extents of the projected points dilated by 1.05.
// Throws DegenerateInput for fewer than 3 or collinear points.
PlaneSegment fit_plane(std::span<const Vec3> points);

// Re-establish the unit/orthogonality invariants after a parameter update:
// normalize n, Gram-Schmidt u against n.
void orthonormalize(PlaneSegment& plane);

// Rodrigues rotation of v about a unit axis.
Vec3 rotate_about_axis(const Vec3& v, const Vec3& axis, double radians);

}  // namespace rfl
