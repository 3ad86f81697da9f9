#include "rfl/renderer.hpp"

#include <cmath>

#include "rfl/errors.hpp"
#include "rfl/parallel.hpp"
#include "rfl/rng.hpp"

namespace rfl {

RaySamples stratified_samples(double near, double far, int k, std::mt19937_64* jitter) {
  if (!(near >= 0.0) || !(far > near))
    throw InvalidRange("stratified_samples: need 0 <= near < far");
  RaySamples s;
  s.t.resize(k);
  s.delta.resize(k);
  const double bin = (far - near) / k;
  for (int i = 0; i < k; ++i) {
    const double offset = jitter ? uniform01(*jitter) : 0.5;
    s.t[i] = near + (i + offset) * bin;
  }
  for (int i = 0; i + 1 < k; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
  s.delta[k - 1] = far - s.t[k - 1];
  return s;
}

CompositeWeights composite_weights(std::span<const double> sigmas,
                                   std::span<const double> deltas) {
  CompositeWeights out;
  out.weights.resize(sigmas.size());
  double T = 1.0;
  for (size_t k = 0; k < sigmas.size(); ++k) {
    const double u = std::exp(-sigmas[k] * deltas[k]);
    out.weights[k] = T * (1.0 - u);
    T *= u;
  }
  out.t_end = T;
  return out;
}

double truncated_transmittance(std::span<const double> sigmas, std::span<const double> ts,
                               std::span<const double> deltas, double t_hit, int* hit_bin) {
  double tau = 0.0;
  int bin = -1;
  for (size_t k = 0; k < sigmas.size(); ++k) {
    const double cover = std::clamp(t_hit - ts[k], 0.0, deltas[k]);
    tau += sigmas[k] * cover;
    if (t_hit >= ts[k] && t_hit < ts[k] + deltas[k]) bin = static_cast<int>(k);
  }
  if (hit_bin) *hit_bin = bin;
  return std::exp(-tau);
}

namespace {

// Gathers raw density and raw color (SH already contracted against the ray
// direction) at one position. The raws are what the tape stores.
inline void gather_raw(const VoxelRadianceField& field, const Vec3& x,
                       const std::array<double, 4>& sh, double* raw_density, double* raw_color) {
  const InterpStencil st = locate(field.dims, field.bbox, field.grid_position(x));
  const auto w = st.weights();
  double rd = 0.0;
  double rc[3] = {0.0, 0.0, 0.0};
  for (int c = 0; c < 8; ++c) {
    const std::size_t v = st.corner(field.dims, c);
    rd += w[c] * field.density_raw.at(v, 0);
    for (int ch = 0; ch < 3; ++ch) {
      double m = 0.0;
      for (int j = 0; j < kShCoeffs; ++j) m += field.color_coeffs.at(v, ch * 4 + j) * sh[j];
      rc[ch] += w[c] * m;
    }
  }
  *raw_density = rd;
  raw_color[0] = rc[0];
  raw_color[1] = rc[1];
  raw_color[2] = rc[2];
}

inline double gather_raw_atten(const AttenuationField& field, const Vec3& x,
                               const std::array<double, 4>& sh) {
  const InterpStencil st = locate(field.dims, field.bbox, field.grid_position(x));
  const auto w = st.weights();
  double raw = 0.0;
  for (int c = 0; c < 8; ++c) {
    const std::size_t v = st.corner(field.dims, c);
    for (int j = 0; j < kShCoeffs; ++j) raw += w[c] * field.coeffs.at(v, j) * sh[j];
  }
  return raw;
}

}  // namespace

RayRender render_ray(const VoxelRadianceField& field, const Ray& ray, double near, double far,
                     int k, RayTape* tape) {
  const RaySamples samples = stratified_samples(near, far, k);
  const auto sh = sh_basis(ray.dir);

  if (tape) {
    tape->ray = ray;
    tape->far = far;
    tape->ts = samples.t;
    tape->deltas = samples.delta;
    tape->samples.resize(k);
  }

  double T = 1.0;
  Vec3 color{};
  double depth = 0.0;
  for (int i = 0; i < k; ++i) {
    const Vec3 x = ray.origin + samples.t[i] * ray.dir;
    double raw_density, raw_color[3];
    gather_raw(field, x, sh, &raw_density, raw_color);
    const double sigma = softplus(raw_density);
    const double u = std::exp(-sigma * samples.delta[i]);
    const double w = T * (1.0 - u);
    color += w * Vec3{sigmoid(raw_color[0]), sigmoid(raw_color[1]), sigmoid(raw_color[2])};
    depth += w * samples.t[i];
    T *= u;
    if (tape) {
      SampleTape& st = tape->samples[i];
      st.raw_density = raw_density;
      st.raw_color[0] = raw_color[0];
      st.raw_color[1] = raw_color[1];
      st.raw_color[2] = raw_color[2];
    }
  }
  depth += T * far;

  if (tape) {
    tape->color = color;
    tape->depth = depth;
    tape->t_end = T;
  }
  return RayRender{color, depth, T};
}

RenderBundle render_reflection_aware(const VoxelRadianceField& field,
                                     const AttenuationField& atten,
                                     std::span<const PlaneSegment> planes, const Ray& ray,
                                     const RenderOptions& opts, BundleTape* tape) {
  BundleTape local;
  BundleTape& tp = tape ? *tape : local;

  const RayRender primary =
      render_ray(field, ray, opts.near, opts.far, opts.k_primary, &tp.primary);

  RenderBundle bundle;
  bundle.primary_color = primary.color;
  bundle.depth = primary.depth;
  bundle.composite = primary.color;
  tp.has_hit = false;

  if (!opts.reflection) return bundle;

  const auto hit = nearest_hit(ray, planes);
  if (!hit) return bundle;

  const PlaneSegment& plane = planes[hit->plane_index];
  const bool flipped = dot(ray.dir, plane.normal) >= 0.0;
  const Vec3 n_oriented = flipped ? -plane.normal : plane.normal;
  const Ray reflected = spawn_reflected_ray(*hit, ray.dir, plane.normal);

  // Transmittance of the primary ray truncated at the hit parameter.
  std::vector<double> sigmas(tp.primary.samples.size());
  for (size_t i = 0; i < sigmas.size(); ++i)
    sigmas[i] = softplus(tp.primary.samples[i].raw_density);
  int hit_bin = -1;
  const double T_hit =
      truncated_transmittance(sigmas, tp.primary.ts, tp.primary.deltas, hit->t, &hit_bin);

  // March the reflected ray through the same radiance field plus the
  // attenuation field.
  const RaySamples rs = stratified_samples(0.0, opts.far_reflect, opts.k_reflect);
  const auto sh = sh_basis(reflected.dir);

  RayTape& rt = tp.reflected;
  rt.ray = reflected;
  rt.far = opts.far_reflect;
  rt.ts = rs.t;
  rt.deltas = rs.delta;
  rt.samples.resize(opts.k_reflect);

  double T = 1.0;
  Vec3 refl_color{};
  Vec3 attenuated{};
  double atten_sum = 0.0;
  double depth = 0.0;
  for (int i = 0; i < opts.k_reflect; ++i) {
    const Vec3 x = reflected.origin + rs.t[i] * reflected.dir;
    double raw_density, raw_color[3];
    gather_raw(field, x, sh, &raw_density, raw_color);
    const double raw_atten = gather_raw_atten(atten, x, sh);
    const double sigma = softplus(raw_density);
    const double a = sigmoid(raw_atten);
    const double u = std::exp(-sigma * rs.delta[i]);
    const double w = T * (1.0 - u);
    const Vec3 c{sigmoid(raw_color[0]), sigmoid(raw_color[1]), sigmoid(raw_color[2])};
    refl_color += w * c;
    attenuated += (w * a) * c;
    atten_sum += w * a;
    depth += w * rs.t[i];
    T *= u;
    SampleTape& st = rt.samples[i];
    st.raw_density = raw_density;
    st.raw_color[0] = raw_color[0];
    st.raw_color[1] = raw_color[1];
    st.raw_color[2] = raw_color[2];
    st.raw_atten = raw_atten;
  }
  rt.color = refl_color;
  rt.depth = depth + T * opts.far_reflect;
  rt.t_end = T;

  tp.has_hit = true;
  tp.hit = *hit;
  tp.normal_flipped = flipped;
  tp.n_oriented = n_oriented;
  tp.d_prime = reflected.dir;
  tp.transmittance = T_hit;
  tp.hit_bin = hit_bin;
  tp.atten_sum = atten_sum;
  tp.attenuated = attenuated;

  bundle.hit = *hit;
  bundle.reflected_color = refl_color;
  bundle.attenuation = atten_sum;
  bundle.attenuated_reflection = attenuated;
  bundle.transmittance = T_hit;
  bundle.composite = primary.color + T_hit * attenuated;
  return bundle;
}

std::vector<RenderBundle> render_image(const VoxelRadianceField& field,
                                       const AttenuationField& atten,
                                       std::span<const PlaneSegment> planes,
                                       const Camera& camera, const RenderOptions& opts,
                                       int threads) {
  std::vector<RenderBundle> out(static_cast<size_t>(camera.width) * camera.height);
  parallel_for(camera.height, threads, [&](std::size_t row) {
    for (int col = 0; col < camera.width; ++col) {
      const Ray ray = camera.pixel_ray(col + 0.5, row + 0.5);
      out[row * camera.width + col] =
          render_reflection_aware(field, atten, planes, ray, opts);
    }
  });
  return out;
}

}  // namespace rfl
