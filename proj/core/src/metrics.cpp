#include "rfl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rfl/errors.hpp"

namespace rfl {

namespace {

double clamp01d(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

void check_shapes(const Image& a, const Image& b, const char* op) {
  if (a.width != b.width || a.height != b.height)
    throw ShapeMismatch(std::string(op) + ": image shapes differ");
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_shapes(a, b, "psnr");
  double sum = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double d = clamp01d(a.pixels[i][c]) - clamp01d(b.pixels[i][c]);
      sum += d * d;
    }
  }
  const double mse = sum / (3.0 * a.pixels.size());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  check_shapes(a, b, "ssim");
  constexpr int kWin = 11;
  if (a.width < kWin || a.height < kWin) throw TooSmall("ssim: images smaller than 11x11");

  double kernel[kWin][kWin];
  {
    const double sigma = 1.5;
    double total = 0.0;
    for (int y = 0; y < kWin; ++y)
      for (int x = 0; x < kWin; ++x) {
        const double dx = x - 5, dy = y - 5;
        kernel[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        total += kernel[y][x];
      }
    for (int y = 0; y < kWin; ++y)
      for (int x = 0; x < kWin; ++x) kernel[y][x] /= total;
  }

  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double channel_mean_sum = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + kWin <= a.height; ++y0) {
      for (int x0 = 0; x0 + kWin <= a.width; ++x0) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int y = 0; y < kWin; ++y)
          for (int x = 0; x < kWin; ++x) {
            const double va = clamp01d(a.at(x0 + x, y0 + y)[ch]);
            const double vb = clamp01d(b.at(x0 + x, y0 + y)[ch]);
            const double w = kernel[y][x];
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        const double va = saa - ma * ma;
        const double vb = sbb - mb * mb;
        const double cov = sab - ma * mb;
        const double val = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                           ((ma * ma + mb * mb + c1) * (va + vb + c2));
        acc += val;
        ++count;
      }
    }
    channel_mean_sum += acc / count;
  }
  return channel_mean_sum / 3.0;
}

DepthError depth_error(const DepthImage& pred, const DepthImage& gt,
                       const std::vector<uint8_t>& mask) {
  if (pred.width != gt.width || pred.height != gt.height ||
      mask.size() != pred.values.size())
    throw ShapeMismatch("depth_error: shapes differ");
  std::vector<double> abs_err;
  abs_err.reserve(pred.values.size());
  double sum = 0.0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    if (!mask[i]) continue;
    const double e = std::abs(pred.values[i] - gt.values[i]);
    abs_err.push_back(e);
    sum += e;
  }
  if (abs_err.empty()) throw EmptyMask("depth_error: mask selects no pixels");
  std::sort(abs_err.begin(), abs_err.end());
  DepthError out;
  out.mae = sum / abs_err.size();
  out.median = abs_err[(abs_err.size() - 1) / 2];
  return out;
}

double ghost_density_score(const VoxelRadianceField& field, const BBox& ghost_region,
                           const BBox& reference_region) {
  auto check = [&](const BBox& r, const char* name) {
    if (!(field.bbox.contains(r.min) && field.bbox.contains(r.max)))
      throw InvalidRegion(std::string("ghost_density_score: ") + name +
                          " region outside the field bounds");
  };
  check(ghost_region, "ghost");
  check(reference_region, "reference");

  auto mean_sigma = [&](const BBox& r) {
    constexpr int n = 16;
    const Vec3 ext = r.extent();
    double sum = 0.0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const Vec3 p{r.min.x + (i + 0.5) / n * ext.x, r.min.y + (j + 0.5) / n * ext.y,
                       r.min.z + (k + 0.5) / n * ext.z};
          const InterpStencil st = locate(field.dims, field.bbox, field.grid_position(p));
          sum += softplus(interpolate(field.density_raw, st, 0));
        }
    return sum / (n * n * n);
  };

  const double ref = mean_sigma(reference_region);
  if (ref <= 0.0)
    throw InvalidRegion("ghost_density_score: reference region has zero density");
  return mean_sigma(ghost_region) / ref;
}

}  // namespace rfl
