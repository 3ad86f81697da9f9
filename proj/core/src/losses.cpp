#include "rfl/losses.hpp"

#include <cmath>

#include "rfl/errors.hpp"

namespace rfl {

namespace {

const int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
const int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_patch(const PatchImage& p, const char* op) {
  if (p.width < 3 || p.height < 3)
    throw PatchTooSmall(std::string(op) + ": patch must be at least 3x3");
}

// Raw Sobel responses (signed) for one channel at interior pixel (x, y),
// 1 <= x <= W-2, 1 <= y <= H-2.
inline void sobel_at(const PatchImage& p, int x, int y, int ch, double* gx, double* gy) {
  double sx = 0.0, sy = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const double v = p.at(x + dx, y + dy)[ch];
      sx += kSobelX[dy + 1][dx + 1] * v;
      sy += kSobelY[dy + 1][dx + 1] * v;
    }
  }
  *gx = sx;
  *gy = sy;
}

}  // namespace

PatchImage sobel_gradients(const PatchImage& patch) {
  check_patch(patch, "sobel_gradients");
  PatchImage out(patch.width - 2, patch.height - 2);
  for (int y = 1; y < patch.height - 1; ++y) {
    for (int x = 1; x < patch.width - 1; ++x) {
      Vec3 mag;
      for (int ch = 0; ch < 3; ++ch) {
        double gx, gy;
        sobel_at(patch, x, y, ch, &gx, &gy);
        mag[ch] = std::abs(gx) + std::abs(gy);
      }
      out.at(x - 1, y - 1) = mag;
    }
  }
  return out;
}

double edge_loss(const PatchImage& primary, const PatchImage& reflected) {
  if (primary.width != reflected.width || primary.height != reflected.height)
    throw PatchTooSmall("edge_loss: patch shapes differ");
  const PatchImage gp = sobel_gradients(primary);
  const PatchImage gr = sobel_gradients(reflected);
  double sum = 0.0;
  for (size_t i = 0; i < gp.pixels.size(); ++i) {
    const Vec3 prod = gp.pixels[i].cmul(gr.pixels[i]);
    sum += prod.x + prod.y + prod.z;  // all factors are nonnegative
  }
  return sum / (3.0 * gp.pixels.size());
}

PatchImage edge_loss_backward(const PatchImage& primary, const PatchImage& reflected,
                              double upstream) {
  if (primary.width != reflected.width || primary.height != reflected.height)
    throw PatchTooSmall("edge_loss_backward: patch shapes differ");
  check_patch(primary, "edge_loss_backward");
  const PatchImage gr = sobel_gradients(reflected);
  PatchImage grad(primary.width, primary.height);

  const double scale = upstream / (3.0 * gr.pixels.size());
  for (int y = 1; y < primary.height - 1; ++y) {
    for (int x = 1; x < primary.width - 1; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        double gx, gy;
        sobel_at(primary, x, y, ch, &gx, &gy);
        const double r = gr.at(x - 1, y - 1)[ch];
        const double cx = scale * r * sgn(gx);
        const double cy = scale * r * sgn(gy);
        if (cx == 0.0 && cy == 0.0) continue;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            grad.at(x + dx, y + dy)[ch] +=
                cx * kSobelX[dy + 1][dx + 1] + cy * kSobelY[dy + 1][dx + 1];
      }
    }
  }
  return grad;
}

double photometric_loss(std::span<const Vec3> rendered, std::span<const Vec3> gt) {
  if (rendered.size() != gt.size())
    throw ShapeMismatch("photometric_loss: batch sizes differ");
  double sum = 0.0;
  for (size_t i = 0; i < rendered.size(); ++i) {
    const Vec3 d = rendered[i] - gt[i];
    sum += dot(d, d);
  }
  return sum / (3.0 * rendered.size());
}

}  // namespace rfl
