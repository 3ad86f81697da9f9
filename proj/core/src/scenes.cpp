#include "rfl/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rfl/errors.hpp"
#include "rfl/image_io.hpp"
#include "rfl/parallel.hpp"
#include "rfl/rng.hpp"

namespace rfl {

namespace {
constexpr double kHitEps = 1e-9;
}

const char* const kSplitNames[3] = {"inside-train", "inside-val", "outside"};

// ---------------------------------------------------------------------------
// Primitives

Vec3 Primitive::albedo_at(const Vec3& p) const {
  if (texture.amp == 0.0) return albedo;
  const double s = 1.0 + texture.amp * std::sin(2.0 * M_PI * dot(p, texture.dir) / texture.period);
  return clamp01(albedo * s);
}

std::optional<double> Primitive::intersect(const Ray& ray) const {
  if (type == PrimitiveType::Sphere) {
    const Vec3 oc = ray.origin - center;
    const double b = dot(oc, ray.dir);
    const double c = dot(oc, oc) - radius * radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double t0 = -b - sq;
    const double t1 = -b + sq;
    if (t0 > kHitEps) return t0;
    if (t1 > kHitEps) return t1;
    return std::nullopt;
  }
  // box slabs
  double tmin = -1e300, tmax = 1e300;
  const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double d[3] = {ray.dir.x, ray.dir.y, ray.dir.z};
  const double lo[3] = {bmin.x, bmin.y, bmin.z};
  const double hi[3] = {bmax.x, bmax.y, bmax.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a];
    double t1 = (hi[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmax < tmin) return std::nullopt;
  }
  if (tmin > kHitEps) return tmin;
  if (tmax > kHitEps) return tmax;
  return std::nullopt;
}

BBox Primitive::bounds() const {
  if (type == PrimitiveType::Sphere)
    return {center - Vec3{radius, radius, radius}, center + Vec3{radius, radius, radius}};
  return {bmin, bmax};
}

std::vector<PlaneSegment> Scene::planes() const {
  std::vector<PlaneSegment> out;
  out.reserve(reflectors.size());
  for (const Reflector& r : reflectors) out.push_back(r.plane);
  return out;
}

namespace {

BBox mirror_box_through_plane(const BBox& b, const PlaneSegment& plane) {
  BBox out{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner{c & 1 ? b.max.x : b.min.x, c & 2 ? b.max.y : b.min.y,
                      c & 4 ? b.max.z : b.min.z};
    const Vec3 m = corner - 2.0 * dot(corner - plane.center, plane.normal) * plane.normal;
    out.min = {std::min(out.min.x, m.x), std::min(out.min.y, m.y), std::min(out.min.z, m.z)};
    out.max = {std::max(out.max.x, m.x), std::max(out.max.y, m.y), std::max(out.max.z, m.z)};
  }
  return out;
}

bool boxes_overlap(const BBox& a, const BBox& b, double eps) {
  return a.min.x < b.max.x - eps && b.min.x < a.max.x - eps && a.min.y < b.max.y - eps &&
         b.min.y < a.max.y - eps && a.min.z < b.max.z - eps && b.min.z < a.max.z - eps;
}

}  // namespace

bool Scene::validate(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (const Reflector& r : reflectors) {
    if (r.reflectance < 0.0 || r.reflectance > 1.0) return fail("reflectance outside [0,1]");
    const Vec3 side = normalized(r.plane.side());
    for (size_t pi = 0; pi < primitives.size(); ++pi) {
      const BBox b = primitives[pi].bounds();
      double dmin = 1e300, dmax = -1e300;
      double smin = 1e300, smax = -1e300, umin = 1e300, umax = -1e300;
      for (int c = 0; c < 8; ++c) {
        const Vec3 corner{c & 1 ? b.max.x : b.min.x, c & 2 ? b.max.y : b.min.y,
                          c & 4 ? b.max.z : b.min.z};
        const Vec3 rel = corner - r.plane.center;
        const double dist = dot(rel, r.plane.normal);
        dmin = std::min(dmin, dist);
        dmax = std::max(dmax, dist);
        smin = std::min(smin, dot(rel, side));
        smax = std::max(smax, dot(rel, side));
        umin = std::min(umin, dot(rel, r.plane.up));
        umax = std::max(umax, dot(rel, r.plane.up));
      }
      const bool straddles = dmin < -1e-9 && dmax > 1e-9;
      const bool overlaps_rect = smin < 0.5 * r.plane.width - 1e-9 &&
                                 smax > -0.5 * r.plane.width + 1e-9 &&
                                 umin < 0.5 * r.plane.height - 1e-9 &&
                                 umax > -0.5 * r.plane.height + 1e-9;
      if (straddles && overlaps_rect)
        return fail("primitive " + std::to_string(pi) + " straddles a reflector segment");
    }
  }
  if (ghost_reference >= 0) {
    if (ghost_reference >= static_cast<int>(primitives.size()) || reflectors.empty())
      return fail("ghost_reference out of range");
    const BBox ghost =
        mirror_box_through_plane(primitives[ghost_reference].bounds(), reflectors[0].plane);
    if (!(bbox.contains(ghost.min) && bbox.contains(ghost.max)))
      return fail("ghost region outside the field bounds");
    for (size_t pi = 0; pi < primitives.size(); ++pi)
      if (boxes_overlap(ghost, primitives[pi].bounds(), 1e-9))
        return fail("ghost region overlaps primitive " + std::to_string(pi));
  }
  return true;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

Primitive box(Vec3 lo, Vec3 hi, Vec3 albedo, AlbedoTexture tex = {}) {
  Primitive p;
  p.type = PrimitiveType::Box;
  p.bmin = lo;
  p.bmax = hi;
  p.albedo = albedo;
  p.texture = tex;
  return p;
}

Scene make_window_room() {
  Scene s;
  s.name = "window-room";
  s.background = {0, 0, 0};
  s.near = 0.05;
  s.far = 6.0;
  s.bbox = {{-1.3, -1.1, -1.3}, {1.3, 1.1, 2.4}};

  // room shell
  s.primitives.push_back(box({-1.15, -0.95, -1.15}, {1.15, -0.8, 1.15}, {0.55, 0.5, 0.45},
                             {0.25, {0, 0, 1}, 0.5}));
  s.primitives.push_back(box({-1.15, 0.8, -1.15}, {1.15, 0.95, 1.15}, {0.72, 0.72, 0.75}));
  s.primitives.push_back(box({-1.15, -0.95, -1.15}, {1.15, 0.95, -1.0}, {0.75, 0.72, 0.65},
                             {0.2, {1, 0, 0}, 0.6}));
  s.primitives.push_back(box({-1.15, -0.95, -1.15}, {-1.0, 0.95, 1.15}, {0.6, 0.65, 0.7},
                             {0.2, {0, 1, 0}, 0.5}));
  s.primitives.push_back(box({1.0, -0.95, -1.15}, {1.15, 0.95, 1.15}, {0.7, 0.62, 0.55},
                             {0.2, {0, 1, 0}, 0.5}));
  // window wall with an aperture x in [-0.6, 0.6], y in [-0.45, 0.45]
  s.primitives.push_back(box({-1.15, -0.95, 1.0}, {-0.6, 0.95, 1.1}, {0.8, 0.78, 0.7}));
  s.primitives.push_back(box({0.6, -0.95, 1.0}, {1.15, 0.95, 1.1}, {0.8, 0.78, 0.7}));
  s.primitives.push_back(box({-0.6, -0.95, 1.0}, {0.6, -0.45, 1.1}, {0.8, 0.78, 0.7}));
  s.primitives.push_back(box({-0.6, 0.45, 1.0}, {0.6, 0.95, 1.1}, {0.8, 0.78, 0.7}));
  // interior shelves (the reflected content)
  s.primitives.push_back(box({-0.55, -0.8, -0.2}, {-0.1, -0.1, 0.2}, {0.75, 0.15, 0.12},
                             {0.3, {0, 1, 0}, 0.3}));
  s.primitives.push_back(box({0.1, -0.8, -0.15}, {0.5, 0.0, 0.25}, {0.1, 0.5, 0.2},
                             {0.3, {1, 0, 0}, 0.25}));
  // exterior content seen through the window
  s.primitives.push_back(box({-0.8, -0.6, 1.3}, {-0.3, 0.3, 1.6}, {0.15, 0.3, 0.65},
                             {0.25, {0, 1, 0}, 0.3}));
  s.primitives.push_back(box({0.25, -0.5, 1.35}, {0.75, 0.4, 1.65}, {0.7, 0.58, 0.15},
                             {0.25, {1, 0, 0}, 0.3}));
  s.ghost_reference = 9;  // shelf A mirrors to z in [1.8, 2.2]

  Reflector window;
  window.plane.center = {0, 0, 1.0};
  window.plane.normal = {0, 0, 1};
  window.plane.up = {0, 1, 0};
  window.plane.width = 1.2;
  window.plane.height = 0.9;
  window.reflectance = 0.4;
  s.reflectors.push_back(window);

  s.interior_center = {0, 0, -0.25};
  s.interior_look = {0, -0.35, 0};
  s.orbit_radius = 0.5;
  s.orbit_y_lo = 0.3;
  s.orbit_y_hi = 0.45;
  s.outside_dist_lo = 1.4;
  s.outside_dist_hi = 1.9;
  return s;
}

Scene make_mirror_box() {
  Scene s;
  s.name = "mirror-box";
  s.background = {0, 0, 0};
  s.near = 0.05;
  s.far = 6.0;
  s.bbox = {{-1.3, -1.3, -1.3}, {2.35, 1.3, 1.3}};

  s.primitives.push_back(box({-1.15, -1.15, -1.15}, {1.15, -1.0, 1.15}, {0.6, 0.55, 0.5},
                             {0.25, {1, 0, 0}, 0.4}));
  s.primitives.push_back(box({-1.15, 1.0, -1.15}, {1.15, 1.15, 1.15}, {0.7, 0.7, 0.72},
                             {0.15, {0, 0, 1}, 0.5}));
  s.primitives.push_back(box({-1.15, -1.15, -1.15}, {1.15, 1.15, -1.0}, {0.7, 0.65, 0.55},
                             {0.2, {1, 0, 0}, 0.5}));
  s.primitives.push_back(box({-1.15, -1.15, 1.0}, {1.15, 1.15, 1.15}, {0.62, 0.68, 0.6},
                             {0.2, {0, 1, 0}, 0.45}));
  s.primitives.push_back(box({-1.15, -1.15, -1.15}, {-1.0, 1.15, 1.15}, {0.65, 0.6, 0.7},
                             {0.2, {0, 0, 1}, 0.5}));
  s.primitives.push_back(box({1.0, -1.15, -1.15}, {1.15, 1.15, 1.15}, {0.2, 0.2, 0.22}));
  s.primitives.push_back(box({-0.2, -1.0, -0.35}, {0.35, -0.25, 0.15}, {0.1, 0.45, 0.5},
                             {0.3, {0, 1, 0}, 0.25}));
  s.ghost_reference = 6;

  Reflector mirror;
  mirror.plane.center = {1.0, 0, 0};
  mirror.plane.normal = {1, 0, 0};
  mirror.plane.up = {0, 1, 0};
  mirror.plane.width = 1.7;
  mirror.plane.height = 1.7;
  mirror.reflectance = 1.0;
  s.reflectors.push_back(mirror);

  s.interior_center = {-0.25, 0, 0};
  s.interior_look = {0, -0.55, 0};
  s.orbit_radius = 0.5;
  s.orbit_y_lo = 0.25;
  s.orbit_y_hi = 0.45;
  s.outside_dist_lo = 1.5;
  s.outside_dist_hi = 1.9;
  return s;
}

}  // namespace

Scene preset_scene(const std::string& name) {
  if (name == "window-room") return make_window_room();
  if (name == "mirror-box") return make_mirror_box();
  throw UnknownPreset("unknown scene preset: " + name);
}

// ---------------------------------------------------------------------------
// Oracle

OracleResult oracle_trace(const Scene& scene, const Ray& ray) {
  double t_prim = 1e300;
  int prim_index = -1;
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto t = scene.primitives[i].intersect(ray);
    if (t && *t < t_prim) {
      t_prim = *t;
      prim_index = static_cast<int>(i);
    }
  }

  OracleResult out;
  out.primary = prim_index >= 0
                    ? scene.primitives[prim_index].albedo_at(ray.origin + t_prim * ray.dir)
                    : scene.background;
  out.depth = prim_index >= 0 ? t_prim : scene.far;
  out.reflection = {0, 0, 0};

  // nearest reflector in front of the first primitive
  const auto planes = scene.planes();
  const auto hit = nearest_hit(ray, planes);
  if (hit && hit->t < t_prim) {
    const Ray mirrored =
        spawn_reflected_ray(*hit, ray.dir, planes[hit->plane_index].normal);
    double t2 = 1e300;
    int idx2 = -1;
    for (size_t i = 0; i < scene.primitives.size(); ++i) {
      const auto t = scene.primitives[i].intersect(mirrored);
      if (t && *t < t2) {
        t2 = *t;
        idx2 = static_cast<int>(i);
      }
    }
    const Vec3 src = idx2 >= 0
                         ? scene.primitives[idx2].albedo_at(mirrored.origin + t2 * mirrored.dir)
                         : scene.background;
    out.reflection = scene.reflectors[hit->plane_index].reflectance * src;
  }
  out.composite = clamp01(out.primary + out.reflection);
  return out;
}

// ---------------------------------------------------------------------------
// Camera splits

std::vector<Camera> generate_split_cameras(const Scene& scene, const std::string& split,
                                           int count, uint64_t seed, int width, int height,
                                           double fov_deg) {
  int stream;
  if (split == "inside-train")
    stream = 1;
  else if (split == "inside-val")
    stream = 2;
  else if (split == "outside")
    stream = 3;
  else
    throw ConfigError("unknown split: " + split);

  std::mt19937_64 rng(derive_seed(seed, static_cast<uint64_t>(stream)));
  std::vector<Camera> cams;
  cams.reserve(count);

  const PlaneSegment& plane = scene.reflectors.front().plane;
  const Vec3 side = normalized(plane.side());
  const Vec3 to_interior = scene.interior_center - plane.center;
  const Vec3 outward = dot(plane.normal, to_interior) < 0.0 ? plane.normal : -plane.normal;

  for (int i = 0; i < count; ++i) {
    Camera c;
    c.width = width;
    c.height = height;
    c.fov_deg = fov_deg;
    if (stream == 3) {
      const double dist = uniform_in(rng, scene.outside_dist_lo, scene.outside_dist_hi);
      c.position = plane.center + dist * outward + uniform_in(rng, -0.35, 0.35) * side +
                   uniform_in(rng, -0.25, 0.25) * plane.up;
      c.look_at = plane.center + uniform_in(rng, -0.15, 0.15) * side +
                  uniform_in(rng, -0.1, 0.1) * plane.up;
    } else {
      const double angle = 2.0 * M_PI * (i + 0.35 * uniform01(rng)) / count;
      const double radius = scene.orbit_radius * (1.0 + 0.15 * (2.0 * uniform01(rng) - 1.0));
      const double y = uniform_in(rng, scene.orbit_y_lo, scene.orbit_y_hi);
      c.position = {scene.interior_center.x + radius * std::cos(angle), y,
                    scene.interior_center.z + radius * std::sin(angle)};
      if (i % 3 != 2) {
        c.look_at = plane.center + uniform_in(rng, -0.3, 0.3) * (0.5 * plane.width) * side +
                    uniform_in(rng, -0.3, 0.3) * (0.5 * plane.height) * plane.up;
      } else {
        c.look_at = scene.interior_look + Vec3{uniform_in(rng, -0.2, 0.2),
                                               uniform_in(rng, -0.15, 0.15),
                                               uniform_in(rng, -0.2, 0.2)};
      }
    }
    cams.push_back(c);
  }
  return cams;
}

// ---------------------------------------------------------------------------
// Manifest JSON

namespace {

using nlohmann::json;

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

json plane_to_json(const PlaneSegment& p) {
  return {{"p", vec_to_json(p.center)},
          {"n", vec_to_json(p.normal)},
          {"u", vec_to_json(p.up)},
          {"w", p.width},
          {"h", p.height}};
}

PlaneSegment plane_from_json(const json& j) {
  PlaneSegment p;
  p.center = vec_from_json(j.at("p"));
  p.normal = vec_from_json(j.at("n"));
  p.up = vec_from_json(j.at("u"));
  p.width = j.at("w");
  p.height = j.at("h");
  return p;
}

json camera_to_json(const Camera& c) {
  return {{"position", vec_to_json(c.position)}, {"look_at", vec_to_json(c.look_at)},
          {"up", vec_to_json(c.up)},             {"fov_deg", c.fov_deg},
          {"width", c.width},                    {"height", c.height}};
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.position = vec_from_json(j.at("position"));
  c.look_at = vec_from_json(j.at("look_at"));
  c.up = vec_from_json(j.at("up"));
  c.fov_deg = j.at("fov_deg");
  c.width = j.at("width");
  c.height = j.at("height");
  return c;
}

json scene_to_json(const Scene& s) {
  json prims = json::array();
  for (const Primitive& p : s.primitives) {
    json jp = {{"type", p.type == PrimitiveType::Box ? "box" : "sphere"},
               {"albedo", vec_to_json(p.albedo)}};
    if (p.type == PrimitiveType::Box) {
      jp["min"] = vec_to_json(p.bmin);
      jp["max"] = vec_to_json(p.bmax);
    } else {
      jp["center"] = vec_to_json(p.center);
      jp["radius"] = p.radius;
    }
    if (p.texture.amp != 0.0) {
      jp["texture"] = {{"amp", p.texture.amp},
                       {"dir", vec_to_json(p.texture.dir)},
                       {"period", p.texture.period}};
    }
    prims.push_back(jp);
  }
  json refls = json::array();
  for (const Reflector& r : s.reflectors)
    refls.push_back({{"plane", plane_to_json(r.plane)}, {"reflectance", r.reflectance}});
  return {{"name", s.name},
          {"primitives", prims},
          {"reflectors", refls},
          {"background", vec_to_json(s.background)},
          {"bbox_min", vec_to_json(s.bbox.min)},
          {"bbox_max", vec_to_json(s.bbox.max)},
          {"near", s.near},
          {"far", s.far},
          {"ghost_reference", s.ghost_reference},
          {"interior_center", vec_to_json(s.interior_center)},
          {"interior_look", vec_to_json(s.interior_look)},
          {"orbit_radius", s.orbit_radius},
          {"orbit_y_lo", s.orbit_y_lo},
          {"orbit_y_hi", s.orbit_y_hi},
          {"outside_dist_lo", s.outside_dist_lo},
          {"outside_dist_hi", s.outside_dist_hi}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.name = j.at("name");
  for (const json& jp : j.at("primitives")) {
    Primitive p;
    p.type = jp.at("type") == "box" ? PrimitiveType::Box : PrimitiveType::Sphere;
    p.albedo = vec_from_json(jp.at("albedo"));
    if (p.type == PrimitiveType::Box) {
      p.bmin = vec_from_json(jp.at("min"));
      p.bmax = vec_from_json(jp.at("max"));
    } else {
      p.center = vec_from_json(jp.at("center"));
      p.radius = jp.at("radius");
    }
    if (jp.contains("texture")) {
      p.texture.amp = jp.at("texture").at("amp");
      p.texture.dir = vec_from_json(jp.at("texture").at("dir"));
      p.texture.period = jp.at("texture").at("period");
    }
    s.primitives.push_back(p);
  }
  for (const json& jr : j.at("reflectors")) {
    Reflector r;
    r.plane = plane_from_json(jr.at("plane"));
    r.reflectance = jr.at("reflectance");
    s.reflectors.push_back(r);
  }
  s.background = vec_from_json(j.at("background"));
  s.bbox = {vec_from_json(j.at("bbox_min")), vec_from_json(j.at("bbox_max"))};
  s.near = j.at("near");
  s.far = j.at("far");
  s.ghost_reference = j.at("ghost_reference");
  s.interior_center = vec_from_json(j.at("interior_center"));
  s.interior_look = vec_from_json(j.at("interior_look"));
  s.orbit_radius = j.at("orbit_radius");
  s.orbit_y_lo = j.at("orbit_y_lo");
  s.orbit_y_hi = j.at("orbit_y_hi");
  s.outside_dist_lo = j.at("outside_dist_lo");
  s.outside_dist_hi = j.at("outside_dist_hi");
  return s;
}

}  // namespace

std::string manifest_to_json(const DatasetManifest& m) {
  json splits = json::object();
  for (const auto& [name, cams] : m.split_cameras) {
    json jc = json::array();
    for (const Camera& c : cams) jc.push_back(camera_to_json(c));
    splits[name] = {{"cameras", jc}};
  }
  json images = json::object();
  for (const auto& [name, views] : m.images) {
    json jv = json::array();
    for (const ViewImages& v : views)
      jv.push_back({{"composite", v.composite},
                    {"reflection_free", v.reflection_free},
                    {"reflection_only", v.reflection_only},
                    {"depth", v.depth}});
    images[name] = jv;
  }
  json planes = json::array();
  for (const Reflector& r : m.scene.reflectors) planes.push_back(plane_to_json(r.plane));

  const json root = {{"scene", scene_to_json(m.scene)},
                     {"planes", planes},
                     {"splits", splits},
                     {"images", images}};
  return root.dump(2);
}

DatasetManifest manifest_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest parse error: ") + e.what());
  }
  DatasetManifest m;
  m.scene = scene_from_json(root.at("scene"));
  for (const auto& [name, body] : root.at("splits").items()) {
    std::vector<Camera> cams;
    for (const json& jc : body.at("cameras")) cams.push_back(camera_from_json(jc));
    m.split_cameras[name] = std::move(cams);
  }
  if (root.contains("images")) {
    for (const auto& [name, body] : root.at("images").items()) {
      std::vector<ViewImages> views;
      for (const json& jv : body) {
        ViewImages v;
        v.composite = jv.at("composite");
        v.reflection_free = jv.at("reflection_free");
        v.reflection_only = jv.at("reflection_only");
        v.depth = jv.at("depth");
        views.push_back(v);
      }
      m.images[name] = std::move(views);
    }
  }
  return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << manifest_to_json(m) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

// ---------------------------------------------------------------------------
// Dataset rendering

OracleView render_oracle_view(const Scene& scene, const Camera& camera, int supersample,
                              int threads) {
  OracleView v;
  v.composite = Image(camera.width, camera.height);
  v.reflection_free = Image(camera.width, camera.height);
  v.reflection_only = Image(camera.width, camera.height);
  v.depth = DepthImage(camera.width, camera.height);
  const int ss = std::max(1, supersample);
  const double inv = 1.0 / (ss * ss);
  parallel_for(camera.height, threads, [&](std::size_t y) {
    for (int x = 0; x < camera.width; ++x) {
      Vec3 comp{}, prim{}, refl{};
      double depth = 0.0;
      for (int b = 0; b < ss; ++b)
        for (int a = 0; a < ss; ++a) {
          const Ray ray = camera.pixel_ray(x + (a + 0.5) / ss, y + (b + 0.5) / ss);
          const OracleResult r = oracle_trace(scene, ray);
          comp += r.composite;
          prim += r.primary;
          refl += r.reflection;
          depth += r.depth;
        }
      v.composite.at(x, static_cast<int>(y)) = comp * inv;
      v.reflection_free.at(x, static_cast<int>(y)) = prim * inv;
      v.reflection_only.at(x, static_cast<int>(y)) = clamp01(refl * inv);
      v.depth.at(x, static_cast<int>(y)) = depth * inv;
    }
  });
  return v;
}

void render_oracle_dataset(const Scene& scene, DatasetManifest& manifest, int supersample,
                           const std::string& out_dir, int threads, bool png) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output dir: " + out_dir);

  manifest.scene = scene;
  manifest.images.clear();
  for (const auto& [split, cams] : manifest.split_cameras) {
    const fs::path split_dir = fs::path(out_dir) / split;
    fs::create_directories(split_dir, ec);
    if (ec) throw IoError("cannot create output dir: " + split_dir.string());
    std::vector<ViewImages> views;
    for (size_t i = 0; i < cams.size(); ++i) {
      const OracleView v = render_oracle_view(scene, cams[i], supersample, threads);
      char idx[16];
      std::snprintf(idx, sizeof(idx), "%06zu", i);
      ViewImages paths;
      paths.composite = split + "/composite_" + idx + ".ppm";
      paths.reflection_free = split + "/reflfree_" + idx + ".ppm";
      paths.reflection_only = split + "/reflonly_" + idx + ".ppm";
      paths.depth = split + "/depth_" + idx + ".pfm";
      write_ppm((fs::path(out_dir) / paths.composite).string(), v.composite);
      write_ppm((fs::path(out_dir) / paths.reflection_free).string(), v.reflection_free);
      write_ppm((fs::path(out_dir) / paths.reflection_only).string(), v.reflection_only);
      write_pfm((fs::path(out_dir) / paths.depth).string(), v.depth);
      if (png) {
        write_png((split_dir / ("composite_" + std::string(idx) + ".png")).string(),
                  v.composite);
        write_png((split_dir / ("reflfree_" + std::string(idx) + ".png")).string(),
                  v.reflection_free);
      }
      views.push_back(paths);
    }
    manifest.images[split] = std::move(views);
  }
}

}  // namespace rfl
