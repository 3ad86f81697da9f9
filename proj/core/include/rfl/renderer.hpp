#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rfl/camera.hpp"
#include "rfl/field.hpp"
#include "rfl/geometry.hpp"

namespace rfl {

// ---------------------------------------------------------------------------
// Quadrature sample placement.

struct RaySamples {
  std::vector<double> t;      // K strictly increasing parameters in [near, far]
  std::vector<double> delta;  // spacing to the next sample; last entry is far - t_K
};

// K equal bins over [near, far]; samples at bin centers, or uniform within
// each bin when a generator is supplied. Throws InvalidRange for far <= near.
RaySamples stratified_samples(double near, double far, int k, std::mt19937_64* jitter = nullptr);

// Volume-rendering weights: w_k = T_k (1 - exp(-sigma_k delta_k)) with
// T_k the transmittance accumulated before sample k. Returns T after the
// last sample as well; sum(w) + T_end == 1 up to roundoff.
struct CompositeWeights {
  std::vector<double> weights;
  double t_end = 1.0;
};
CompositeWeights composite_weights(std::span<const double> sigmas,
                                   std::span<const double> deltas);

// ---------------------------------------------------------------------------
// Per-ray outputs.

struct RenderBundle {
  Vec3 primary_color;                 // C(r)
  Vec3 reflected_color;               // C(r'); zero when no hit
  double attenuation = 0.0;           // A(r')
  Vec3 attenuated_reflection;         // C^A(r')
  double transmittance = 1.0;         // T of the primary ray at the hit
  Vec3 composite;                     // C(r) + T * C^A(r')
  double depth = 0.0;                 // expected primary termination
  std::optional<PlaneHit> hit;
};

struct RenderOptions {
  double near = 0.05;
  double far = 6.0;
  int k_primary = 128;
  int k_reflect = 128;
  double far_reflect = 6.0;  // reflected rays march over [0, far_reflect]
  bool reflection = true;    // false: single-ray baseline, composite == primary
};

// ---------------------------------------------------------------------------
// Forward tape. When a tape is passed to the render entry points, everything
// the reverse pass needs is recorded: sample parameters and raw
// (pre-activation) field values. Interpolation stencils are recomputed from
// the positions during the backward sweep.

struct SampleTape {
  double raw_density = 0.0;
  double raw_color[3] = {0.0, 0.0, 0.0};
  double raw_atten = 0.0;  // reflected samples only
};

struct RayTape {
  Ray ray;
  double far = 0.0;
  std::vector<double> ts;
  std::vector<double> deltas;
  std::vector<SampleTape> samples;
  Vec3 color;
  double depth = 0.0;
  double t_end = 1.0;
};

struct BundleTape {
  RayTape primary;
  bool has_hit = false;
  PlaneHit hit;
  bool normal_flipped = false;  // stored normal was reversed to face the ray
  Vec3 n_oriented;
  Vec3 d_prime;
  double transmittance = 1.0;   // T at the hit
  int hit_bin = -1;             // primary sample interval containing hit.t
  RayTape reflected;            // empty when !has_hit
  double atten_sum = 0.0;       // A(r')
  Vec3 attenuated;              // C^A(r')
};

// ---------------------------------------------------------------------------
// Rendering.

struct RayRender {
  Vec3 color;
  double depth = 0.0;
  double t_end = 1.0;
};

RayRender render_ray(const VoxelRadianceField& field, const Ray& ray, double near, double far,
                     int k, RayTape* tape = nullptr);

// Reflection-aware render of one ray: the primary ray is marched through the
// plane unaltered; at the nearest plane hit a single reflected ray is spawned
// and marched through the same radiance field plus the attenuation field, and
// the attenuated reflection is composited on top of the primary color scaled
// by the primary transmittance at the hit.
RenderBundle render_reflection_aware(const VoxelRadianceField& field,
                                     const AttenuationField& atten,
                                     std::span<const PlaneSegment> planes, const Ray& ray,
                                     const RenderOptions& opts, BundleTape* tape = nullptr);

// Per-pixel bundles for a full image, pixel-center rays, rows sharded across
// workers. Output is ordered row-major regardless of the thread count.
std::vector<RenderBundle> render_image(const VoxelRadianceField& field,
                                       const AttenuationField& atten,
                                       std::span<const PlaneSegment> planes,
                                       const Camera& camera, const RenderOptions& opts,
                                       int threads = 0);

// Transmittance of the primary quadrature truncated at ray parameter t_hit,
// plus the index of the sample interval containing it (-1 if before the
// first sample). Exposed for the reverse pass and for tests.
double truncated_transmittance(std::span<const double> sigmas, std::span<const double> ts,
                               std::span<const double> deltas, double t_hit, int* hit_bin);

}  // namespace rfl
