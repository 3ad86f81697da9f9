#pragma once

#include <span>
#include <vector>

#include "rfl/vec.hpp"

namespace rfl {

// A small contiguous block of pixel colors, row-major.
struct PatchImage {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;

  PatchImage() = default;
  PatchImage(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h) {}
  Vec3& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Per-channel |Gx * patch| + |Gy * patch| at interior pixels; output is
// (H-2) x (W-2). Throws PatchTooSmall for H or W below 3.
PatchImage sobel_gradients(const PatchImage& patch);

// Mean over interior pixels and channels of the elementwise product of the
// two Sobel magnitude maps. The reflected side is a constant for gradient
// purposes (stop-gradient); see edge_loss_backward.
double edge_loss(const PatchImage& primary, const PatchImage& reflected);

// d(edge_loss)/d(primary pixel colors), scaled by `upstream`. The reflected
// patch contributes values only; no gradient flows into it.
PatchImage edge_loss_backward(const PatchImage& primary, const PatchImage& reflected,
                              double upstream);

// Mean squared error over rays and channels.
double photometric_loss(std::span<const Vec3> rendered, std::span<const Vec3> gt);

inline double total_loss(double photo, double edge, double lambda_edge) {
  return photo + lambda_edge * edge;
}

}  // namespace rfl
