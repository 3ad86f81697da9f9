#include "rfl/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "rfl/errors.hpp"
#include "rfl/image_io.hpp"
#include "rfl/renderer.hpp"

namespace rfl {

namespace {

namespace fs = std::filesystem;

struct ViewRender {
  Image composite;
  Image primary;
  Image reflected;
  Image attenuated;
  Image attenuation;
  DepthImage depth;
};

ViewRender render_view(const VoxelRadianceField& field, const AttenuationField& atten,
                       const std::vector<PlaneSegment>& planes, const Camera& cam,
                       const Config& cfg) {
  RenderOptions opts;
  opts.near = cfg.near;
  opts.far = cfg.far;
  opts.k_primary = cfg.k_eval;
  opts.k_reflect = cfg.k_eval;
  opts.far_reflect = cfg.far;
  opts.reflection = cfg.reflection_rays;

  const auto bundles = render_image(field, atten, planes, cam, opts, cfg.threads);
  ViewRender v;
  v.composite = Image(cam.width, cam.height);
  v.primary = Image(cam.width, cam.height);
  v.reflected = Image(cam.width, cam.height);
  v.attenuated = Image(cam.width, cam.height);
  v.attenuation = Image(cam.width, cam.height);
  v.depth = DepthImage(cam.width, cam.height);
  for (size_t i = 0; i < bundles.size(); ++i) {
    const RenderBundle& b = bundles[i];
    v.composite.pixels[i] = b.composite;
    v.primary.pixels[i] = b.primary_color;
    v.reflected.pixels[i] = b.reflected_color;
    v.attenuated.pixels[i] = b.attenuated_reflection;
    v.attenuation.pixels[i] = {b.attenuation, b.attenuation, b.attenuation};
    v.depth.values[i] = b.depth;
  }
  return v;
}

BBox mirror_through_plane(const BBox& b, const PlaneSegment& plane) {
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

}  // namespace

std::string EvalResult::csv() const {
  std::ostringstream out;
  out << "split,view,psnr,ssim,lpips,depth_mae,ghost_ratio\n";
  char line[256];
  double sp = 0, ss = 0, sd = 0;
  for (const Row& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%d,%.6f,%.6f,n/a,%.6f,%.9f\n", r.split.c_str(),
                  r.view, r.psnr, r.ssim, r.depth_mae, ghost_ratio);
    out << line;
    sp += r.psnr;
    ss += r.ssim;
    sd += r.depth_mae;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    std::snprintf(line, sizeof(line), "mean,all,%.6f,%.6f,n/a,%.6f,%.9f\n", sp / n, ss / n,
                  sd / n, ghost_ratio);
    out << line;
  }
  return out.str();
}

EvalResult evaluate_model(const VoxelRadianceField& field, const AttenuationField& atten,
                          const std::vector<PlaneSegment>& planes,
                          const DatasetManifest& manifest, const std::string& dataset_dir,
                          const Config& cfg) {
  for (const char* split : {"inside-val", "outside"}) {
    if (!manifest.split_cameras.count(split) || !manifest.images.count(split))
      throw SplitMissing(std::string("dataset is missing split: ") + split);
  }

  EvalResult result;

  // Ghost region: the reference primitive's bounds mirrored through the
  // (ground truth) reflector plane.
  if (manifest.scene.ghost_reference >= 0 && !manifest.scene.reflectors.empty()) {
    const BBox ref = manifest.scene.primitives[manifest.scene.ghost_reference].bounds();
    const BBox ghost = mirror_through_plane(ref, manifest.scene.reflectors[0].plane);
    result.ghost_ratio = ghost_density_score(field, ghost, ref);
  }

  double val_psnr = 0, val_ssim = 0, val_primary = 0, out_psnr = 0;
  int val_count = 0, out_count = 0;

  for (const char* split : {"inside-val", "outside"}) {
    const auto& cams = manifest.split_cameras.at(split);
    const auto& views = manifest.images.at(split);
    const bool is_val = std::string(split) == "inside-val";
    for (size_t i = 0; i < cams.size(); ++i) {
      const ViewRender vr = render_view(field, atten, planes, cams[i], cfg);
      const Image gt_composite =
          read_ppm((fs::path(dataset_dir) / views[i].composite).string());
      const Image gt_reflfree =
          read_ppm((fs::path(dataset_dir) / views[i].reflection_free).string());
      const DepthImage gt_depth =
          read_pfm((fs::path(dataset_dir) / views[i].depth).string());

      std::vector<uint8_t> mask(gt_depth.values.size());
      for (size_t p = 0; p < mask.size(); ++p)
        mask[p] = gt_depth.values[p] < manifest.scene.far * 0.999;

      EvalResult::Row row;
      row.split = split;
      row.view = static_cast<int>(i);
      if (is_val) {
        row.psnr = psnr(vr.composite, gt_composite);
        row.ssim = ssim(vr.composite, gt_composite);
        val_psnr += row.psnr;
        val_ssim += row.ssim;
        val_primary += psnr(vr.primary, gt_reflfree);
        ++val_count;
      } else {
        row.psnr = psnr(vr.primary, gt_reflfree);
        row.ssim = ssim(vr.primary, gt_reflfree);
        out_psnr += row.psnr;
        ++out_count;
      }
      row.depth_mae = depth_error(vr.depth, gt_depth, mask).mae;
      result.rows.push_back(row);
    }
  }

  result.mean_val_psnr = val_count ? val_psnr / val_count : 0.0;
  result.mean_val_ssim = val_count ? val_ssim / val_count : 0.0;
  result.mean_val_primary_psnr = val_count ? val_primary / val_count : 0.0;
  result.mean_outside_psnr = out_count ? out_psnr / out_count : 0.0;
  return result;
}

void write_render_panels(const VoxelRadianceField& field, const AttenuationField& atten,
                         const std::vector<PlaneSegment>& planes, const Camera& camera,
                         const Config& cfg, int view_index, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output dir: " + out_dir);

  const ViewRender vr = render_view(field, atten, planes, camera, cfg);
  Image depth_vis(camera.width, camera.height);
  for (size_t i = 0; i < vr.depth.values.size(); ++i) {
    const double d = vr.depth.values[i] / cfg.far;
    depth_vis.pixels[i] = {d, d, d};
  }

  char idx[16];
  std::snprintf(idx, sizeof(idx), "%06d", view_index);
  auto emit = [&](const std::string& stem, const Image& img) {
    write_ppm((fs::path(out_dir) / (stem + "_" + idx + ".ppm")).string(), img);
    if (cfg.png) write_png((fs::path(out_dir) / (stem + "_" + idx + ".png")).string(), img);
  };
  emit("rgb", vr.primary);
  emit("rgb_R", vr.reflected);
  emit("alpha", vr.attenuation);
  emit("alpha_R", vr.attenuated);
  emit("depth", depth_vis);
  emit("rgb_composite", vr.composite);
}

}  // namespace rfl
