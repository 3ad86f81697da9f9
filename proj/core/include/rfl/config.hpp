#pragma once

#include <cstdint>
#include <string>

namespace rfl {

// Run configuration. Plain-text form: one key=value per line, # comments,
// flat namespace. Command-line flags override file values.
struct Config {
  std::string scene = "window-room";
  int width = 64;
  int height = 64;
  int k_train = 128;
  int k_reflect = 128;
  int k_eval = 256;
  int grid = 64;
  int atten_grid = 32;
  double near = 0.05;
  double far = 6.0;
  int phase_a = 2000;
  int phase_b = 2000;
  int phase_c = 4000;
  double lr_grid = 0.01;
  double lr_plane = 0.001;
  double density_init = -3.0;  // raw (pre-softplus) initial density
  double lambda_edge = 0.5;
  double clip_norm = 10.0;
  int patches_per_iter = 4;
  uint64_t seed = 1;
  int threads = 0;  // 0 = all cores
  int views_train = 12;
  int views_val = 4;
  int views_outside = 4;
  int supersample = 4;
  bool contraction = false;
  bool edge_loss = true;
  bool plane_refine = true;
  bool scheduling = true;
  bool reflection_rays = true;
  double plane_rot_deg = 0.0;    // initial plane perturbation (about the up axis)
  double plane_trans_frac = 0.0; // initial offset along the normal, fraction of extent
  bool png = false;

  // Lossless text round-trip.
  std::string to_text() const;
  static Config from_text(const std::string& text);
  static Config from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);  // ConfigError on bad key
  void validate() const;                                       // ConfigError on bad values
};

}  // namespace rfl
