#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rfl/field.hpp"
#include "rfl/geometry.hpp"
#include "rfl/losses.hpp"
#include "rfl/renderer.hpp"

namespace rfl {

// ---------------------------------------------------------------------------
// Gradient containers.

struct PlaneGrad {
  Vec3 dp, dn, du;
  double dw = 0.0, dh = 0.0;

  PlaneGrad& operator+=(const PlaneGrad& o) {
    dp += o.dp;
    dn += o.dn;
    du += o.du;
    dw += o.dw;
    dh += o.dh;
    return *this;
  }
};

struct GradientBuffers {
  Grid3 density;  // shape of VoxelRadianceField::density_raw
  Grid3 color;    // shape of VoxelRadianceField::color_coeffs
  Grid3 atten;    // shape of AttenuationField::coeffs
  std::vector<PlaneGrad> planes;

  GradientBuffers() = default;
  GradientBuffers(const VoxelRadianceField& f, const AttenuationField& a, size_t n_planes)
      : density(f.dims, 1),
        color(f.dims, 12),
        atten(a.dims, 4),
        planes(n_planes) {}

  void zero();
  double squared_norm() const;
  void scale(double s);
  bool finite() const;
};

// Scatter stream produced by the per-ray reverse pass. Entries are applied
// into GradientBuffers in the order they were emitted, so merging sinks in a
// fixed patch order keeps training results independent of the thread count.
struct GradSink {
  std::vector<std::pair<int32_t, double>> density;
  std::vector<std::pair<int32_t, double>> color;
  std::vector<std::pair<int32_t, double>> atten;
  std::vector<PlaneGrad> planes;  // dense, one slot per scene plane

  void reset(size_t n_planes) {
    density.clear();
    color.clear();
    atten.clear();
    planes.assign(n_planes, PlaneGrad{});
  }
};

// Applies a sink; `touched_*` (optional) collect newly touched linear indices
// per grid, deduplicated with the stamp arrays, in first-touch order.
struct TouchTracker {
  std::vector<uint32_t> stamp;  // per linear grid entry
  uint32_t epoch = 0;
  std::vector<int32_t> touched;

  void init(size_t n) { stamp.assign(n, 0); }
  void begin() {
    ++epoch;
    touched.clear();
  }
};

void apply_sink(const GradSink& sink, GradientBuffers* out, TouchTracker* density_touch = nullptr,
                TouchTracker* color_touch = nullptr, TouchTracker* atten_touch = nullptr);

// ---------------------------------------------------------------------------
// Reverse pass for one rendered ray. `g_composite` is dL/dC^comp,
// `g_primary` is any gradient applied directly to the primary color (the
// sparse edge term). Adjoints flow into the radiance grids, the attenuation
// grid, and the plane parameters (through the hit parameter, the truncated
// transmittance, the reflected origin, and the reflected direction,
// including the view-direction dependence of the SH color and attenuation).
void backward_bundle(const VoxelRadianceField& field, const AttenuationField& atten,
                     std::span<const PlaneSegment> planes, const BundleTape& tape,
                     const Vec3& g_composite, const Vec3& g_primary, GradSink* sink);

// ---------------------------------------------------------------------------
// Patch-level forward/backward used by training and the gradient checker.

struct RenderedPatch {
  int size = 0;
  std::vector<BundleTape> tapes;  // size*size, row-major
  PatchImage primary;             // C(r) per pixel
  PatchImage reflected;           // C(r') per pixel (zero where no hit)
  std::vector<Vec3> composite;
  bool any_hit = false;
};

RenderedPatch render_patch(const VoxelRadianceField& field, const AttenuationField& atten,
                           std::span<const PlaneSegment> planes, std::span<const Ray> rays,
                           int size, const RenderOptions& opts);

struct BatchLossParts {
  double photo = 0.0;
  double edge = 0.0;  // mean over eligible patches; 0 when none
  int eligible_patches = 0;
  double total(double lambda_edge) const { return photo + lambda_edge * edge; }
};

// Loss over a batch of rendered patches. When `frozen_reflected` is non-null
// it supplies the reflected patches for the edge term (the stop-gradient
// side), which is how finite differencing of the objective stays consistent
// with the detached backward pass.
BatchLossParts batch_loss(std::span<const RenderedPatch> patches,
                          std::span<const std::vector<Vec3>> gt,
                          const std::vector<PatchImage>* frozen_reflected = nullptr);

// Reverse pass over one patch: photometric gradient for every ray plus the
// edge term when the patch is eligible. `photo_scale` = 1 / (3 * total rays
// in the batch); `edge_scale` = lambda_edge / eligible patches (0 disables).
void backward_patch(const VoxelRadianceField& field, const AttenuationField& atten,
                    std::span<const PlaneSegment> planes, const RenderedPatch& patch,
                    std::span<const Vec3> gt, double photo_scale, double edge_scale,
                    GradSink* sink);

// ---------------------------------------------------------------------------
// Adam.

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_update_entry(double& theta, double& m, double& v, double g, double lr,
                              double bias1, double bias2, const AdamParams& p = {}) {
  m = p.beta1 * m + (1.0 - p.beta1) * g;
  v = p.beta2 * v + (1.0 - p.beta2) * g * g;
  const double mhat = m / bias1;
  const double vhat = v / bias2;
  theta -= lr * mhat / (std::sqrt(vhat) + p.eps);
}

struct OptimizerState {
  Grid3 m_density, v_density;
  Grid3 m_color, v_color;
  Grid3 m_atten, v_atten;
  std::vector<std::array<double, 11>> m_planes, v_planes;  // order p,n,u,w,h
  int64_t step = 0;

  OptimizerState() = default;
  OptimizerState(const VoxelRadianceField& f, const AttenuationField& a, size_t n_planes)
      : m_density(f.dims, 1),
        v_density(f.dims, 1),
        m_color(f.dims, 12),
        v_color(f.dims, 12),
        m_atten(a.dims, 4),
        v_atten(a.dims, 4),
        m_planes(n_planes),
        v_planes(n_planes) {
    for (auto& m : m_planes) m.fill(0.0);
    for (auto& v : v_planes) v.fill(0.0);
  }
};

// Dense Adam step over a whole grid; `step` is the 1-based update count used
// for bias correction. The trainer runs the sparse equivalent over touched
// entries through adam_update_entry.
void adam_step(Grid3& params, Grid3& m, Grid3& v, const Grid3& grads, double lr, int64_t step,
               const AdamParams& p = {});

// Plane update + re-orthonormalization of (n, u).
void adam_step_planes(std::vector<PlaneSegment>& planes,
                      std::vector<std::array<double, 11>>& m,
                      std::vector<std::array<double, 11>>& v,
                      const std::vector<PlaneGrad>& grads, double lr, int64_t step,
                      const AdamParams& p = {});

// ---------------------------------------------------------------------------
// Training schedule: three phases. A trains everything jointly without the
// edge term, B freezes the planes and enables the edge term at weight 0.5,
// C freezes the attenuation field and decays the edge weight linearly to 0.
struct TrainSchedule {
  int n_a = 2000;
  int n_b = 2000;
  int n_c = 4000;
  double lambda_peak = 0.5;
  bool edge_enabled = true;
  bool plane_refine = true;
  bool scheduling = true;

  int total() const { return n_a + n_b + n_c; }
  char phase_of(int iter) const;
  double lambda_edge(int iter) const;
  bool plane_trainable(int iter) const;
  bool atten_trainable(int iter) const;
};

// ---------------------------------------------------------------------------
// Finite-difference verification of the full pipeline on a small random
// setup (8^3 grids, 2 planes, 4 patches of 8x8 rays).

struct GradCheckReport {
  double density = 0.0, color = 0.0, atten = 0.0;
  double plane_p = 0.0, plane_n = 0.0, plane_u = 0.0, plane_w = 0.0, plane_h = 0.0;
  double seconds = 0.0;

  double max_rel() const;
  bool pass(double tol = 1e-3) const { return max_rel() < tol; }
  std::string summary() const;
};

GradCheckReport finite_difference_check(uint64_t seed);

double fd_relative_error(double analytic, double numeric);

}  // namespace rfl
