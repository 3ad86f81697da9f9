#pragma once

#include <cstdint>
#include <vector>

#include "rfl/field.hpp"
#include "rfl/image.hpp"

namespace rfl {

// 10 log10(1 / MSE) with MSE over all pixels and channels; values are
// clamped to [0,1] first. Identical images report the 99 dB cap.
double psnr(const Image& a, const Image& b);

// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2, valid-window positions, per channel then averaged.
double ssim(const Image& a, const Image& b);

struct DepthError {
  double mae = 0.0;
  double median = 0.0;  // lower of the two central order statistics
};
DepthError depth_error(const DepthImage& pred, const DepthImage& gt,
                       const std::vector<uint8_t>& mask);

// (mean activated density over the ghost region) / (same over the reference
// region), each sampled on a 16^3 lattice of cell centers. The ghost region
// is the mirror image of a real object's bounds through the reflector, where
// a single-ray model parks its false duplicate.
double ghost_density_score(const VoxelRadianceField& field, const BBox& ghost_region,
                           const BBox& reference_region);

}  // namespace rfl
