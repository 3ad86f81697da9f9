#pragma once

#include <string>
#include <vector>

#include "rfl/field.hpp"
#include "rfl/geometry.hpp"
#include "rfl/optim.hpp"

namespace rfl {

// On-disk model state. Header: magic "RFL1", flags, grid resolutions, bounds,
// plane count; grids follow as raw little-endian 32-bit floats in x-fastest
// order (channels innermost), then plane records as doubles, then optionally
// the optimizer state.
struct Checkpoint {
  VoxelRadianceField field;
  AttenuationField atten;
  std::vector<PlaneSegment> planes;
  bool has_optim = false;
  OptimizerState optim;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rfl
