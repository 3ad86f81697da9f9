#include "rfl/field.hpp"

#include <algorithm>
#include <cmath>

namespace rfl {

InterpStencil locate(const GridDims& dims, const BBox& bbox, const Vec3& p) {
  InterpStencil st;
  const Vec3 ext = bbox.extent();
  const double cell[3] = {ext.x / (dims.nx - 1), ext.y / (dims.ny - 1), ext.z / (dims.nz - 1)};
  st.inv_cell = {1.0 / cell[0], 1.0 / cell[1], 1.0 / cell[2]};

  const int n[3] = {dims.nx, dims.ny, dims.nz};
  int base[3];
  double frac[3];
  bool clamped[3];
  const double pv[3] = {p.x, p.y, p.z};
  const double mn[3] = {bbox.min.x, bbox.min.y, bbox.min.z};
  for (int a = 0; a < 3; ++a) {
    double g = (pv[a] - mn[a]) / cell[a];
    clamped[a] = g < 0.0 || g > n[a] - 1;
    g = std::clamp(g, 0.0, static_cast<double>(n[a] - 1));
    int i = std::min(static_cast<int>(g), n[a] - 2);
    base[a] = i;
    frac[a] = g - i;
  }
  st.i0 = base[0];
  st.j0 = base[1];
  st.k0 = base[2];
  st.fx = frac[0];
  st.fy = frac[1];
  st.fz = frac[2];
  st.clamped_x = clamped[0];
  st.clamped_y = clamped[1];
  st.clamped_z = clamped[2];
  return st;
}

double interpolate(const Grid3& grid, const InterpStencil& st, int channel) {
  const auto w = st.weights();
  double v = 0.0;
  for (int c = 0; c < 8; ++c) v += w[c] * grid.at(st.corner(grid.dims(), c), channel);
  return v;
}

Vec3 interpolate_spatial_grad(const Grid3& grid, const InterpStencil& st, int channel) {
  double corner_vals[8];
  for (int c = 0; c < 8; ++c) corner_vals[c] = grid.at(st.corner(grid.dims(), c), channel);

  const double gx[2] = {1.0 - st.fx, st.fx};
  const double gy[2] = {1.0 - st.fy, st.fy};
  const double gz[2] = {1.0 - st.fz, st.fz};

  double dvx = 0.0, dvy = 0.0, dvz = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
    const double sx = bx ? 1.0 : -1.0;
    const double sy = by ? 1.0 : -1.0;
    const double sz = bz ? 1.0 : -1.0;
    dvx += sx * gy[by] * gz[bz] * corner_vals[c];
    dvy += gx[bx] * sy * gz[bz] * corner_vals[c];
    dvz += gx[bx] * gy[by] * sz * corner_vals[c];
  }
  return {st.clamped_x ? 0.0 : dvx * st.inv_cell.x, st.clamped_y ? 0.0 : dvy * st.inv_cell.y,
          st.clamped_z ? 0.0 : dvz * st.inv_cell.z};
}

Vec3 contract_point(const Vec3& x) {
  const double r = norm(x);
  if (r <= 1.0) return x;
  return (2.0 - 1.0 / r) * (x / r);
}

Vec3 contract_point_grad(const Vec3& x, const Vec3& g) {
  const double r = norm(x);
  if (r <= 1.0) return g;
  // f(x) = (2/r - 1/r^2) x;  J = a I + b x x^T with
  // a = 2/r - 1/r^2, b = (2/r^3)(1/r - 1). J is symmetric.
  const double a = 2.0 / r - 1.0 / (r * r);
  const double b = (2.0 / (r * r * r)) * (1.0 / r - 1.0);
  return a * g + b * dot(x, g) * x;
}

FieldSample sample_radiance(const VoxelRadianceField& field, const Vec3& x, const Vec3& d) {
  const InterpStencil st = locate(field.dims, field.bbox, field.grid_position(x));
  FieldSample out;
  out.corner_weights = st.weights();
  for (int c = 0; c < 8; ++c) out.corners[c] = st.corner(field.dims, c);

  double raw_density = 0.0;
  double raw_color[3] = {0.0, 0.0, 0.0};
  const auto sh = sh_basis(d);
  for (int c = 0; c < 8; ++c) {
    const std::size_t v = out.corners[c];
    const double w = out.corner_weights[c];
    raw_density += w * field.density_raw.at(v, 0);
    for (int ch = 0; ch < 3; ++ch) {
      double m = 0.0;
      for (int j = 0; j < kShCoeffs; ++j) m += field.color_coeffs.at(v, ch * 4 + j) * sh[j];
      raw_color[ch] += w * m;
    }
  }
  out.sigma = softplus(raw_density);
  out.color = {sigmoid(raw_color[0]), sigmoid(raw_color[1]), sigmoid(raw_color[2])};
  return out;
}

double sample_attenuation(const AttenuationField& field, const Vec3& x, const Vec3& d_prime) {
  const InterpStencil st = locate(field.dims, field.bbox, field.grid_position(x));
  const auto sh = sh_basis(d_prime);
  const auto w = st.weights();
  double raw = 0.0;
  for (int c = 0; c < 8; ++c) {
    const std::size_t v = st.corner(field.dims, c);
    for (int j = 0; j < kShCoeffs; ++j) raw += w[c] * field.coeffs.at(v, j) * sh[j];
  }
  return sigmoid(raw);
}

}  // namespace rfl
