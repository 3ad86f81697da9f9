#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfl/camera.hpp"
#include "rfl/field.hpp"
#include "rfl/geometry.hpp"
#include "rfl/image.hpp"

namespace rfl {

// ---------------------------------------------------------------------------
// Scene description: diffuse primitives (flat shading, albedo only) plus
// planar reflectors with a scalar reflectance. Flat shading keeps the scene
// exactly representable by a view-independent radiance field.

enum class PrimitiveType { Box, Sphere };

// Sinusoidal albedo modulation; amp = 0 means a solid color.
struct AlbedoTexture {
  double amp = 0.0;
  Vec3 dir{1, 0, 0};
  double period = 1.0;
};

struct Primitive {
  PrimitiveType type = PrimitiveType::Box;
  Vec3 bmin, bmax;     // box extents
  Vec3 center;         // sphere
  double radius = 0.0;
  Vec3 albedo{0.5, 0.5, 0.5};
  AlbedoTexture texture;

  Vec3 albedo_at(const Vec3& p) const;
  std::optional<double> intersect(const Ray& ray) const;  // nearest t > 0
  BBox bounds() const;
};

struct Reflector {
  PlaneSegment plane;
  double reflectance = 1.0;  // rho in [0,1]
};

struct Scene {
  std::string name;
  std::vector<Primitive> primitives;
  std::vector<Reflector> reflectors;
  Vec3 background{};
  BBox bbox;  // suggested field bounds (covers the mirrored ghost region)
  double near = 0.05;
  double far = 6.0;
  int ghost_reference = -1;  // primitive whose mirror image marks the ghost region

  // camera-generation parameters
  Vec3 interior_center;
  Vec3 interior_look;
  double orbit_radius = 0.5;
  double orbit_y_lo = 0.3, orbit_y_hi = 0.45;
  double outside_dist_lo = 1.4, outside_dist_hi = 1.9;

  std::vector<PlaneSegment> planes() const;
  // Checks that no primitive straddles a reflector segment and that camera
  // positions can't start inside geometry; used by tests and preset builders.
  bool validate(std::string* why = nullptr) const;
};

// name in {"mirror-box", "window-room"}; throws UnknownPreset otherwise.
Scene preset_scene(const std::string& name);

// ---------------------------------------------------------------------------
// Analytic one-bounce ray tracing oracle. Primary = albedo of the first
// primitive hit ignoring reflectors; a reflector hit in front of it adds
// rho * (albedo along the mirrored ray); composite = clamp(primary +
// reflection). Depth is the primitive distance (far when nothing is hit).

struct OracleResult {
  Vec3 composite;
  Vec3 primary;
  Vec3 reflection;
  double depth = 0.0;
};

OracleResult oracle_trace(const Scene& scene, const Ray& ray);

// ---------------------------------------------------------------------------
// Camera splits. inside-train / inside-val sit on a jittered interior orbit
// facing the reflector and the room; outside poses sit beyond the reflector
// looking back at it. Train and val draw from disjoint seed streams.

extern const char* const kSplitNames[3];  // inside-train, inside-val, outside

std::vector<Camera> generate_split_cameras(const Scene& scene, const std::string& split,
                                           int count, uint64_t seed, int width, int height,
                                           double fov_deg = 65.0);

// ---------------------------------------------------------------------------
// Dataset manifest + rendering.

struct ViewImages {
  std::string composite;
  std::string reflection_free;
  std::string reflection_only;
  std::string depth;
};

struct DatasetManifest {
  Scene scene;
  std::map<std::string, std::vector<Camera>> split_cameras;
  std::map<std::string, std::vector<ViewImages>> images;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);
void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

// Renders every view of every split with n x n supersampling and writes the
// four ground-truth channels (composite, reflection-free, reflection-only as
// PPM; depth as PFM) into out_dir, filling manifest.images. Optionally also
// writes PNG copies of the color channels.
void render_oracle_dataset(const Scene& scene, DatasetManifest& manifest, int supersample,
                           const std::string& out_dir, int threads = 0, bool png = false);

// Oracle render of a single view (used by tests and the dataset writer).
struct OracleView {
  Image composite;
  Image reflection_free;
  Image reflection_only;
  DepthImage depth;
};
OracleView render_oracle_view(const Scene& scene, const Camera& camera, int supersample,
                              int threads = 0);

}  // namespace rfl
