#include "rfl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rfl/errors.hpp"
#include "rfl/image_io.hpp"
#include "rfl/optim.hpp"
#include "rfl/parallel.hpp"
#include "rfl/rng.hpp"

namespace rfl {

namespace {
constexpr int kPatch = 8;  // training rays come in 8x8 pixel patches
}

std::vector<PlaneSegment> initial_planes(const DatasetManifest& manifest, double rot_deg,
                                         double trans_frac) {
  std::vector<PlaneSegment> planes;
  for (const Reflector& r : manifest.scene.reflectors) {
    PlaneSegment p = r.plane;
    const Vec3 n0 = p.normal;
    if (rot_deg != 0.0)
      p.normal = rotate_about_axis(p.normal, p.up, rot_deg * M_PI / 180.0);
    if (trans_frac != 0.0) p.center += trans_frac * std::max(p.width, p.height) * n0;
    orthonormalize(p);
    planes.push_back(p);
  }
  return planes;
}

TrainResult run_schedule(const Config& cfg, const DatasetManifest& manifest,
                         const std::string& dataset_dir, const std::string& out_dir) {
  namespace fs = std::filesystem;
  cfg.validate();

  const auto cam_it = manifest.split_cameras.find("inside-train");
  const auto img_it = manifest.images.find("inside-train");
  if (cam_it == manifest.split_cameras.end() || img_it == manifest.images.end())
    throw SplitMissing("dataset is missing split: inside-train");
  const std::vector<Camera>& cameras = cam_it->second;
  if (cameras.size() != img_it->second.size())
    throw IoError("manifest cameras/images mismatch for inside-train");

  std::vector<Image> gt_images;
  gt_images.reserve(cameras.size());
  for (const ViewImages& v : img_it->second)
    gt_images.push_back(read_ppm((fs::path(dataset_dir) / v.composite).string()));
  for (size_t i = 0; i < cameras.size(); ++i)
    if (gt_images[i].width != cameras[i].width || gt_images[i].height != cameras[i].height)
      throw IoError("training image size does not match its camera");

  // --- model state ----------------------------------------------------------
  const GridDims dims{cfg.grid, cfg.grid, cfg.grid};
  const GridDims adims{cfg.atten_grid, cfg.atten_grid, cfg.atten_grid};
  const BBox bbox = manifest.scene.bbox;
  VoxelRadianceField field(dims, bbox, cfg.contraction);
  field.density_raw.fill(cfg.density_init);
  AttenuationField atten(adims, bbox, cfg.contraction);
  std::vector<PlaneSegment> planes =
      initial_planes(manifest, cfg.plane_rot_deg, cfg.plane_trans_frac);

  TrainSchedule schedule;
  schedule.n_a = cfg.phase_a;
  schedule.n_b = cfg.phase_b;
  schedule.n_c = cfg.phase_c;
  schedule.lambda_peak = cfg.lambda_edge;
  schedule.edge_enabled = cfg.edge_loss;
  schedule.plane_refine = cfg.plane_refine;
  schedule.scheduling = cfg.scheduling;

  RenderOptions opts;
  opts.near = cfg.near;
  opts.far = cfg.far;
  opts.k_primary = cfg.k_train;
  opts.k_reflect = cfg.k_reflect;
  opts.far_reflect = cfg.far;
  opts.reflection = cfg.reflection_rays;

  GradientBuffers grads(field, atten, planes.size());
  grads.zero();
  TouchTracker touch_density, touch_color, touch_atten;
  touch_density.init(grads.density.size());
  touch_color.init(grads.color.size());
  touch_atten.init(grads.atten.size());
  OptimizerState optim(field, atten, planes.size());
  const AdamParams adam;

  std::mt19937_64 batch_rng(derive_seed(cfg.seed, 101));
  const int B = cfg.patches_per_iter;
  const int rays_per_patch = kPatch * kPatch;
  std::vector<std::vector<Ray>> rays(B, std::vector<Ray>(rays_per_patch));
  std::vector<std::vector<Vec3>> gt(B, std::vector<Vec3>(rays_per_patch));
  std::vector<RenderedPatch> patches(B);
  std::vector<GradSink> sinks(B);

  std::ostringstream csv;
  csv << "iter,phase,L_photo,L_edge,lambda_edge\n";

  auto save = [&](const std::string& name) {
    if (out_dir.empty()) return;
    Checkpoint c;
    c.field = field;
    c.atten = atten;
    c.planes = planes;
    c.has_optim = true;
    c.optim = optim;
    save_checkpoint((fs::path(out_dir) / name).string(), c);
  };
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output dir: " + out_dir);
  }

  const int n_iters = schedule.total();
  for (int iter = 0; iter < n_iters; ++iter) {
    const double lambda = schedule.lambda_edge(iter);
    const bool plane_on = schedule.plane_trainable(iter);
    const bool atten_on = schedule.atten_trainable(iter);

    // Patch selection happens on the master stream so the batch sequence is
    // independent of the worker count.
    for (int b = 0; b < B; ++b) {
      const int view = uniform_int(batch_rng, static_cast<int>(cameras.size()));
      const Camera& cam = cameras[view];
      const int x0 = uniform_int(batch_rng, cam.width - kPatch + 1);
      const int y0 = uniform_int(batch_rng, cam.height - kPatch + 1);
      for (int j = 0; j < kPatch; ++j)
        for (int i = 0; i < kPatch; ++i) {
          rays[b][j * kPatch + i] = cam.pixel_ray(x0 + i + 0.5, y0 + j + 0.5);
          gt[b][j * kPatch + i] = gt_images[view].at(x0 + i, y0 + j);
        }
    }

    parallel_for(B, cfg.threads, [&](std::size_t b) {
      patches[b] = render_patch(field, atten, planes, rays[b], kPatch, opts);
    });

    const BatchLossParts parts = batch_loss(patches, gt, nullptr);
    if (!std::isfinite(parts.photo) || !std::isfinite(parts.edge))
      throw NonFiniteGradient("non-finite loss at iteration " + std::to_string(iter));

    const double photo_scale = 1.0 / (3.0 * B * rays_per_patch);
    const double edge_scale =
        (lambda > 0.0 && parts.eligible_patches > 0) ? lambda / parts.eligible_patches : 0.0;
    parallel_for(B, cfg.threads, [&](std::size_t b) {
      sinks[b].reset(planes.size());
      backward_patch(field, atten, planes, patches[b], gt[b], photo_scale, edge_scale,
                     &sinks[b]);
    });

    // Merge in patch order; touched-entry lists drive the sparse update.
    touch_density.begin();
    touch_color.begin();
    touch_atten.begin();
    for (int b = 0; b < B; ++b)
      apply_sink(sinks[b], &grads, &touch_density, &touch_color, &touch_atten);

    // Global norm over the trainable groups, then clip.
    double norm_sq = 0.0;
    for (int32_t idx : touch_density.touched) {
      const double g = grads.density.data()[idx];
      norm_sq += g * g;
    }
    for (int32_t idx : touch_color.touched) {
      const double g = grads.color.data()[idx];
      norm_sq += g * g;
    }
    if (atten_on) {
      for (int32_t idx : touch_atten.touched) {
        const double g = grads.atten.data()[idx];
        norm_sq += g * g;
      }
    }
    if (plane_on) {
      for (const PlaneGrad& pg : grads.planes)
        norm_sq += norm_squared(pg.dp) + norm_squared(pg.dn) + norm_squared(pg.du) +
                   pg.dw * pg.dw + pg.dh * pg.dh;
    }
    if (!std::isfinite(norm_sq))
      throw NonFiniteGradient("non-finite gradient at iteration " + std::to_string(iter));
    const double norm = std::sqrt(norm_sq);
    const double clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;

    optim.step = iter + 1;
    const double bias1 = 1.0 - std::pow(adam.beta1, static_cast<double>(optim.step));
    const double bias2 = 1.0 - std::pow(adam.beta2, static_cast<double>(optim.step));

    for (int32_t idx : touch_density.touched) {
      adam_update_entry(field.density_raw.data()[idx], optim.m_density.data()[idx],
                        optim.v_density.data()[idx], clip * grads.density.data()[idx],
                        cfg.lr_grid, bias1, bias2, adam);
      grads.density.data()[idx] = 0.0;
    }
    for (int32_t idx : touch_color.touched) {
      adam_update_entry(field.color_coeffs.data()[idx], optim.m_color.data()[idx],
                        optim.v_color.data()[idx], clip * grads.color.data()[idx], cfg.lr_grid,
                        bias1, bias2, adam);
      grads.color.data()[idx] = 0.0;
    }
    for (int32_t idx : touch_atten.touched) {
      if (atten_on)
        adam_update_entry(atten.coeffs.data()[idx], optim.m_atten.data()[idx],
                          optim.v_atten.data()[idx], clip * grads.atten.data()[idx],
                          cfg.lr_grid, bias1, bias2, adam);
      grads.atten.data()[idx] = 0.0;
    }
    if (plane_on) {
      std::vector<PlaneGrad> scaled = grads.planes;
      for (PlaneGrad& pg : scaled) {
        pg.dp *= clip;
        pg.dn *= clip;
        pg.du *= clip;
        pg.dw *= clip;
        pg.dh *= clip;
      }
      adam_step_planes(planes, optim.m_planes, optim.v_planes, scaled, cfg.lr_plane,
                       optim.step, adam);
    }
    std::fill(grads.planes.begin(), grads.planes.end(), PlaneGrad{});

    char line[160];
    std::snprintf(line, sizeof(line), "%d,%c,%.17g,%.17g,%.17g\n", iter,
                  schedule.phase_of(iter), parts.photo, parts.edge, lambda);
    csv << line;

    if (schedule.scheduling) {
      if (schedule.n_a > 0 && iter == schedule.n_a - 1) save("checkpoint_phase_a.rfl");
      if (schedule.n_b > 0 && iter == schedule.n_a + schedule.n_b - 1)
        save("checkpoint_phase_b.rfl");
    }
  }
  save("checkpoint.rfl");

  TrainResult result;
  result.state.field = std::move(field);
  result.state.atten = std::move(atten);
  result.state.planes = std::move(planes);
  result.state.has_optim = true;
  result.state.optim = std::move(optim);
  result.csv = csv.str();

  if (!out_dir.empty()) {
    std::ofstream f(fs::path(out_dir) / "train_log.csv");
    if (!f) throw IoError("cannot write training log in " + out_dir);
    f << result.csv;
  }
  return result;
}

}  // namespace rfl
