#pragma once

#include <cmath>

#include "rfl/geometry.hpp"
#include "rfl/vec.hpp"

namespace rfl {

// Pinhole camera. Pixel (0,0) is the top-left corner; rays go through
// fractional pixel coordinates so supersampling can subdivide pixels.
struct Camera {
  Vec3 position;
  Vec3 look_at;
  Vec3 up{0.0, 1.0, 0.0};
  double fov_deg = 60.0;  // vertical field of view
  int width = 64;
  int height = 64;

  Ray pixel_ray(double px, double py) const {
    const Vec3 forward = normalized(look_at - position);
    const Vec3 right = normalized(cross(forward, up));
    const Vec3 cam_up = cross(right, forward);
    const double tan_half = std::tan(0.5 * fov_deg * M_PI / 180.0);
    const double aspect = static_cast<double>(width) / height;
    const double sx = (2.0 * px / width - 1.0) * tan_half * aspect;
    const double sy = (1.0 - 2.0 * py / height) * tan_half;
    return Ray{position, normalized(forward + sx * right + sy * cam_up)};
  }
};

}  // namespace rfl
