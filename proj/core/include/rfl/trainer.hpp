#pragma once

#include <string>

#include "rfl/checkpoint.hpp"
#include "rfl/config.hpp"
#include "rfl/scenes.hpp"

namespace rfl {

struct TrainResult {
  Checkpoint state;  // trained fields + planes + optimizer state
  std::string csv;   // iter,phase,L_photo,L_edge,lambda_edge
};

// Executes the three-phase schedule against a generated dataset. When
// out_dir is nonempty, phase-boundary checkpoints (checkpoint_phase_a.rfl,
// checkpoint_phase_b.rfl), the final checkpoint.rfl, and train_log.csv are
// written there. Results are bit-identical for a fixed seed and config at
// any thread count.
TrainResult run_schedule(const Config& cfg, const DatasetManifest& manifest,
                         const std::string& dataset_dir, const std::string& out_dir);

// Plane initialization used by the trainer: the ground-truth reflector
// planes, optionally rotated about their up axis and translated along their
// original normal (fractions of the larger extent).
std::vector<PlaneSegment> initial_planes(const DatasetManifest& manifest, double rot_deg,
                                         double trans_frac);

}  // namespace rfl
