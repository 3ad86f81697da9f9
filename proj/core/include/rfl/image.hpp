#pragma once

#include <vector>

#include "rfl/vec.hpp"

namespace rfl {

// RGB image with scalar channels in [0,1], row-major from the top-left.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h) {}

  Vec3& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Single-channel float image (depth maps).
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

}  // namespace rfl
