#pragma once

#include <string>
#include <vector>

#include "rfl/checkpoint.hpp"
#include "rfl/config.hpp"
#include "rfl/metrics.hpp"
#include "rfl/scenes.hpp"

namespace rfl {

// Per-view metric report against a generated dataset. inside-val rows
// compare the composite render to the ground-truth composite; outside rows
// compare the primary (reflection-free) render to the reflection-free ground
// truth. The ghost-density ratio is a property of the trained field and is
// repeated on every row.
struct EvalResult {
  struct Row {
    std::string split;
    int view = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double depth_mae = 0.0;
  };
  std::vector<Row> rows;
  double ghost_ratio = 0.0;
  double mean_val_psnr = 0.0;
  double mean_val_ssim = 0.0;
  double mean_outside_psnr = 0.0;
  // side metrics used by the reflection-separation experiments: the primary
  // render of inside-val views against the reflection-free ground truth
  double mean_val_primary_psnr = 0.0;

  std::string csv() const;  // split,view,psnr,ssim,lpips,depth_mae,ghost_ratio
};

EvalResult evaluate_model(const VoxelRadianceField& field, const AttenuationField& atten,
                          const std::vector<PlaneSegment>& planes,
                          const DatasetManifest& manifest, const std::string& dataset_dir,
                          const Config& cfg);

// Renders the six-panel set (primary, reflection source, attenuation,
// attenuated reflection, depth, composite) for one view into out_dir.
void write_render_panels(const VoxelRadianceField& field, const AttenuationField& atten,
                         const std::vector<PlaneSegment>& planes, const Camera& camera,
                         const Config& cfg, int view_index, const std::string& out_dir);

}  // namespace rfl
