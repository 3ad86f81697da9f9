#include "rfl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "rfl/errors.hpp"

namespace rfl {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'L', '1'};
constexpr uint32_t kFlagContraction = 1u;
constexpr uint32_t kFlagOptim = 2u;

void write_f32_grid(std::ofstream& f, const Grid3& g) {
  std::vector<float> buf(g.size());
  for (size_t i = 0; i < g.size(); ++i) buf[i] = static_cast<float>(g.data()[i]);
  f.write(reinterpret_cast<const char*>(buf.data()), buf.size() * sizeof(float));
}

void read_f32_grid(std::ifstream& f, Grid3& g) {
  std::vector<float> buf(g.size());
  f.read(reinterpret_cast<char*>(buf.data()), buf.size() * sizeof(float));
  for (size_t i = 0; i < g.size(); ++i) g.data()[i] = buf[i];
}

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& f, T* v) {
  f.read(reinterpret_cast<char*>(v), sizeof(T));
}

void write_plane(std::ofstream& f, const PlaneSegment& p) {
  const double vals[11] = {p.center.x, p.center.y, p.center.z, p.normal.x, p.normal.y,
                           p.normal.z, p.up.x,     p.up.y,     p.up.z,     p.width,
                           p.height};
  f.write(reinterpret_cast<const char*>(vals), sizeof(vals));
}

PlaneSegment read_plane(std::ifstream& f) {
  double v[11];
  f.read(reinterpret_cast<char*>(v), sizeof(v));
  PlaneSegment p;
  p.center = {v[0], v[1], v[2]};
  p.normal = {v[3], v[4], v[5]};
  p.up = {v[6], v[7], v[8]};
  p.width = v[9];
  p.height = v[10];
  return p;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);

  f.write(kMagic, 4);
  uint32_t flags = 0;
  if (ckpt.field.contraction) flags |= kFlagContraction;
  if (ckpt.has_optim) flags |= kFlagOptim;
  write_pod(f, flags);
  const uint32_t rad[3] = {static_cast<uint32_t>(ckpt.field.dims.nx),
                           static_cast<uint32_t>(ckpt.field.dims.ny),
                           static_cast<uint32_t>(ckpt.field.dims.nz)};
  const uint32_t att[3] = {static_cast<uint32_t>(ckpt.atten.dims.nx),
                           static_cast<uint32_t>(ckpt.atten.dims.ny),
                           static_cast<uint32_t>(ckpt.atten.dims.nz)};
  f.write(reinterpret_cast<const char*>(rad), sizeof(rad));
  f.write(reinterpret_cast<const char*>(att), sizeof(att));
  const double bbox_rad[6] = {ckpt.field.bbox.min.x, ckpt.field.bbox.min.y,
                              ckpt.field.bbox.min.z, ckpt.field.bbox.max.x,
                              ckpt.field.bbox.max.y, ckpt.field.bbox.max.z};
  const double bbox_att[6] = {ckpt.atten.bbox.min.x, ckpt.atten.bbox.min.y,
                              ckpt.atten.bbox.min.z, ckpt.atten.bbox.max.x,
                              ckpt.atten.bbox.max.y, ckpt.atten.bbox.max.z};
  f.write(reinterpret_cast<const char*>(bbox_rad), sizeof(bbox_rad));
  f.write(reinterpret_cast<const char*>(bbox_att), sizeof(bbox_att));
  write_pod(f, static_cast<uint32_t>(ckpt.planes.size()));

  write_f32_grid(f, ckpt.field.density_raw);
  write_f32_grid(f, ckpt.field.color_coeffs);
  write_f32_grid(f, ckpt.atten.coeffs);
  for (const PlaneSegment& p : ckpt.planes) write_plane(f, p);

  if (ckpt.has_optim) {
    write_pod(f, static_cast<int64_t>(ckpt.optim.step));
    write_f32_grid(f, ckpt.optim.m_density);
    write_f32_grid(f, ckpt.optim.v_density);
    write_f32_grid(f, ckpt.optim.m_color);
    write_f32_grid(f, ckpt.optim.v_color);
    write_f32_grid(f, ckpt.optim.m_atten);
    write_f32_grid(f, ckpt.optim.v_atten);
    for (size_t i = 0; i < ckpt.planes.size(); ++i) {
      f.write(reinterpret_cast<const char*>(ckpt.optim.m_planes[i].data()),
              11 * sizeof(double));
      f.write(reinterpret_cast<const char*>(ckpt.optim.v_planes[i].data()),
              11 * sizeof(double));
    }
  }
  if (!f) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);

  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw BadCheckpoint("bad magic in checkpoint: " + path);

  uint32_t flags, rad[3], att[3], n_planes;
  read_pod(f, &flags);
  f.read(reinterpret_cast<char*>(rad), sizeof(rad));
  f.read(reinterpret_cast<char*>(att), sizeof(att));
  double bbox_rad[6], bbox_att[6];
  f.read(reinterpret_cast<char*>(bbox_rad), sizeof(bbox_rad));
  f.read(reinterpret_cast<char*>(bbox_att), sizeof(bbox_att));
  read_pod(f, &n_planes);
  if (!f) throw BadCheckpoint("truncated header: " + path);
  if (rad[0] < 2 || rad[1] < 2 || rad[2] < 2 || att[0] < 2 || att[1] < 2 || att[2] < 2 ||
      rad[0] > 4096 || att[0] > 4096 || n_planes > 1024)
    throw BadCheckpoint("implausible header fields: " + path);

  Checkpoint c;
  const GridDims rdims{static_cast<int>(rad[0]), static_cast<int>(rad[1]),
                       static_cast<int>(rad[2])};
  const GridDims adims{static_cast<int>(att[0]), static_cast<int>(att[1]),
                       static_cast<int>(att[2])};
  const bool contraction = (flags & kFlagContraction) != 0;
  c.field = VoxelRadianceField(
      rdims, BBox{{bbox_rad[0], bbox_rad[1], bbox_rad[2]}, {bbox_rad[3], bbox_rad[4], bbox_rad[5]}},
      contraction);
  c.atten = AttenuationField(
      adims, BBox{{bbox_att[0], bbox_att[1], bbox_att[2]}, {bbox_att[3], bbox_att[4], bbox_att[5]}},
      contraction);

  read_f32_grid(f, c.field.density_raw);
  read_f32_grid(f, c.field.color_coeffs);
  read_f32_grid(f, c.atten.coeffs);
  for (uint32_t i = 0; i < n_planes; ++i) c.planes.push_back(read_plane(f));
  if (!f) throw BadCheckpoint("truncated grids: " + path);

  if (flags & kFlagOptim) {
    c.has_optim = true;
    c.optim = OptimizerState(c.field, c.atten, n_planes);
    int64_t step;
    read_pod(f, &step);
    c.optim.step = step;
    read_f32_grid(f, c.optim.m_density);
    read_f32_grid(f, c.optim.v_density);
    read_f32_grid(f, c.optim.m_color);
    read_f32_grid(f, c.optim.v_color);
    read_f32_grid(f, c.optim.m_atten);
    read_f32_grid(f, c.optim.v_atten);
    for (uint32_t i = 0; i < n_planes; ++i) {
      f.read(reinterpret_cast<char*>(c.optim.m_planes[i].data()), 11 * sizeof(double));
      f.read(reinterpret_cast<char*>(c.optim.v_planes[i].data()), 11 * sizeof(double));
    }
    if (!f) throw BadCheckpoint("truncated optimizer state: " + path);
  }
  return c;
}

}  // namespace rfl
