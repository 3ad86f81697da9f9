#include "rfl/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rfl/errors.hpp"

namespace rfl {

std::optional<PlaneHit> intersect_segment(const Ray& ray, const PlaneSegment& plane,
                                          int plane_index) {
  const double denom = dot(ray.dir, plane.normal);
  if (std::abs(denom) < kParallelEps) return std::nullopt;

  const double t = dot(plane.center - ray.origin, plane.normal) / denom;
  if (t <= 0.0) return std::nullopt;

  const Vec3 x = ray.origin + t * ray.dir;
  const Vec3 rel = x - plane.center;
  const Vec2 uv{dot(rel, normalized(plane.side())), dot(rel, plane.up)};
  if (std::abs(uv.x) > 0.5 * plane.width || std::abs(uv.y) > 0.5 * plane.height)
    return std::nullopt;

  return PlaneHit{t, x, uv, plane_index};
}

std::optional<PlaneHit> nearest_hit(const Ray& ray, std::span<const PlaneSegment> planes) {
  std::optional<PlaneHit> best;
  for (size_t i = 0; i < planes.size(); ++i) {
    auto hit = intersect_segment(ray, planes[i], static_cast<int>(i));
    if (hit && (!best || hit->t < best->t)) best = hit;
  }
  return best;
}

Vec3 reflect_direction(const Vec3& d, const Vec3& n) {
  return d - 2.0 * dot(d, n) * n;
}

Ray spawn_reflected_ray(const PlaneHit& hit, const Vec3& d, const Vec3& n) {
  const Vec3 oriented = dot(d, n) < 0.0 ? n : -n;
  const Vec3 d_prime = reflect_direction(d, oriented);
  return Ray{hit.point + kReflectOffset * d_prime, d_prime};
}

void orthonormalize(PlaneSegment& plane) {
  plane.normal = normalized(plane.normal);
  plane.up = normalized(plane.up - dot(plane.up, plane.normal) * plane.normal);
}

Vec3 rotate_about_axis(const Vec3& v, const Vec3& axis, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return v * c + cross(axis, v) * s + axis * (dot(axis, v) * (1.0 - c));
}

namespace {

// Jacobi sweeps for a symmetric 3x3; enough for covariance matrices here.
void sym3_eigen(double a[3][3], double eigval[3], double eigvec[3][3]) {
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-300) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  for (int i = 0; i < 3; ++i) {
    eigval[i] = a[i][i];
    for (int k = 0; k < 3; ++k) eigvec[i][k] = v[k][i];
  }
}

}  // namespace

PlaneSegment fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw DegenerateInput("fit_plane: need at least 3 points");

  Vec3 centroid{};
  for (const Vec3& p : points) centroid += p;
  centroid = centroid / static_cast<double>(points.size());

  double cov[3][3] = {};
  for (const Vec3& p : points) {
    const Vec3 d = p - centroid;
    const double dv[3] = {d.x, d.y, d.z};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cov[i][j] += dv[i] * dv[j];
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cov[i][j] /= static_cast<double>(points.size());

  double eigval[3];
  double eigvec[3][3];
  sym3_eigen(cov, eigval, eigvec);

  int order[3] = {0, 1, 2};
  std::sort(order, order + 3, [&](int a, int b) { return eigval[a] < eigval[b]; });
  const int smallest = order[0];
  const int middle = order[1];
  const int largest = order[2];

  // Collinear (or coincident) points: the two smallest eigenvalues vanish.
  if (eigval[middle] <= 1e-12 * std::max(eigval[largest], 1e-300))
    throw DegenerateInput("fit_plane: points are collinear");

  const Vec3 n = normalized({eigvec[smallest][0], eigvec[smallest][1], eigvec[smallest][2]});

  Vec3 up_candidate = Vec3{0, 1, 0} - dot(Vec3{0, 1, 0}, n) * n;
  if (norm(up_candidate) < 1e-9) {
    up_candidate = Vec3{0, 0, 1} - dot(Vec3{0, 0, 1}, n) * n;
  }
  const Vec3 u = normalized(up_candidate);
  const Vec3 s = normalized(cross(u, n));

  double smin = 0, smax = 0, umin = 0, umax = 0;
  bool first = true;
  for (const Vec3& p : points) {
    const Vec3 d = p - centroid;
    const double ps = dot(d, s);
    const double pu = dot(d, u);
    if (first) {
      smin = smax = ps;
      umin = umax = pu;
      first = false;
    } else {
      smin = std::min(smin, ps);
      smax = std::max(smax, ps);
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
    }
  }

  PlaneSegment out;
  out.center = centroid;
  out.normal = n;
  out.up = u;
  out.width = 1.05 * (smax - smin);
  out.height = 1.05 * (umax - umin);
  return out;
}

}  // namespace rfl
