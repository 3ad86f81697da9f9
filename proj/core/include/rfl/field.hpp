#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rfl/vec.hpp"

namespace rfl {

// ---------------------------------------------------------------------------
// Activations. Density uses softplus (nonnegative), color and attenuation use
// sigmoid (bounded to [0,1]).

inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}
inline double softplus_inverse(double y) { return std::log(std::expm1(y)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
// d/dx softplus(x) = sigmoid(x); d/dx sigmoid(x) = s(1-s).

// ---------------------------------------------------------------------------
// Degree <= 1 real spherical harmonics, order (1, y, z, x).

inline constexpr double kSh0 = 0.28209479177387814;  // 1 / (2 sqrt(pi))
inline constexpr double kSh1 = 0.48860251190291992;  // sqrt(3) / (2 sqrt(pi))
inline constexpr int kShCoeffs = 4;

inline std::array<double, 4> sh_basis(const Vec3& d) {
  return {kSh0, kSh1 * d.y, kSh1 * d.z, kSh1 * d.x};
}

// ---------------------------------------------------------------------------
// Dense grids.

struct GridDims {
  int nx = 0, ny = 0, nz = 0;
  std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const GridDims&) const = default;
};

struct BBox {
  Vec3 min;
  Vec3 max;
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
};

// Multi-channel voxel grid; x varies fastest across voxels, channels are
// innermost: data[(((z*ny)+y)*nx+x)*channels + c].
class Grid3 {
 public:
  Grid3() = default;
  Grid3(GridDims dims, int channels, double fill = 0.0)
      : dims_(dims), channels_(channels), data_(dims.voxels() * channels, fill) {}

  const GridDims& dims() const { return dims_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  std::size_t voxel_index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * dims_.ny + iy) * dims_.nx + ix;
  }
  double at(std::size_t voxel, int c) const { return data_[voxel * channels_ + c]; }
  double& at(std::size_t voxel, int c) { return data_[voxel * channels_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  GridDims dims_;
  int channels_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Trilinear interpolation stencil at a (possibly clamped) position.

struct InterpStencil {
  int i0 = 0, j0 = 0, k0 = 0;  // base corner
  double fx = 0.0, fy = 0.0, fz = 0.0;
  bool clamped_x = false, clamped_y = false, clamped_z = false;
  Vec3 inv_cell;  // 1 / cell size per axis, for spatial gradients

  std::array<double, 8> weights() const {
    const double gx[2] = {1.0 - fx, fx};
    const double gy[2] = {1.0 - fy, fy};
    const double gz[2] = {1.0 - fz, fz};
    std::array<double, 8> w;
    for (int c = 0; c < 8; ++c) w[c] = gx[c & 1] * gy[(c >> 1) & 1] * gz[(c >> 2) & 1];
    return w;
  }

  // Linear voxel index of stencil corner c (bit 0: +x, bit 1: +y, bit 2: +z).
  std::size_t corner(const GridDims& d, int c) const {
    const int ix = i0 + (c & 1), iy = j0 + ((c >> 1) & 1), iz = k0 + ((c >> 2) & 1);
    return (static_cast<std::size_t>(iz) * d.ny + iy) * d.nx + ix;
  }
};

// Grid nodes sit at bbox.min + i*cell; positions outside the bbox clamp to
// the boundary. Requires at least 2 nodes per axis.
InterpStencil locate(const GridDims& dims, const BBox& bbox, const Vec3& p);

double interpolate(const Grid3& grid, const InterpStencil& st, int channel);

// d(interpolated value)/d(world position); zero along clamped axes.
Vec3 interpolate_spatial_grad(const Grid3& grid, const InterpStencil& st, int channel);

// ---------------------------------------------------------------------------
// Contraction reparameterization: identity inside the unit ball, radially
// compressed into the ball of radius 2 outside. Continuous and injective.

Vec3 contract_point(const Vec3& x);

// Jacobian-transpose product d(contract)/dx ^T * g, for backprop through
// contracted sample positions.
Vec3 contract_point_grad(const Vec3& x, const Vec3& g);

// ---------------------------------------------------------------------------
// Fields.

struct VoxelRadianceField {
  GridDims dims;
  BBox bbox;
  bool contraction = false;
  Grid3 density_raw;    // 1 channel, pre-softplus
  Grid3 color_coeffs;   // 12 channels: rgb x 4 SH, channel index = c*4 + j

  VoxelRadianceField() = default;
  VoxelRadianceField(GridDims d, BBox b, bool contract = false)
      : dims(d), bbox(b), contraction(contract), density_raw(d, 1), color_coeffs(d, 12) {}

  Vec3 grid_position(const Vec3& x) const { return contraction ? contract_point(x) : x; }
};

struct AttenuationField {
  GridDims dims;
  BBox bbox;
  bool contraction = false;
  Grid3 coeffs;  // 4 SH channels, pre-sigmoid

  AttenuationField() = default;
  AttenuationField(GridDims d, BBox b, bool contract = false)
      : dims(d), bbox(b), contraction(contract), coeffs(d, 4) {}

  Vec3 grid_position(const Vec3& x) const { return contraction ? contract_point(x) : x; }
};

struct FieldSample {
  double sigma = 0.0;
  Vec3 color;
  std::array<double, 8> corner_weights{};
  std::array<std::size_t, 8> corners{};
};

FieldSample sample_radiance(const VoxelRadianceField& field, const Vec3& x, const Vec3& d);

double sample_attenuation(const AttenuationField& field, const Vec3& x, const Vec3& d_prime);

}  // namespace rfl
