#include "rfl/image_io.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "rfl/errors.hpp"

namespace rfl {

namespace {

uint8_t to_byte(double v) {
  v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<uint8_t>(std::lround(255.0 * v));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  return f;
}

}  // namespace

void write_ppm(const std::string& path, const Image& image) {
  std::ofstream f = open_out(path);
  f << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const Vec3& p = image.at(x, y);
      row[x * 3 + 0] = to_byte(p.x);
      row[x * 3 + 1] = to_byte(p.y);
      row[x * 3 + 2] = to_byte(p.z);
    }
    f.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!f) throw IoError("write failed: " + path);
}

Image read_ppm(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string magic;
  int w, h, maxval;
  f >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0)
    throw IoError("unsupported PPM: " + path);
  f.get();  // single whitespace after header
  Image img(w, h);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!f) throw IoError("truncated PPM: " + path);
    for (int x = 0; x < w; ++x)
      img.at(x, y) = Vec3{row[x * 3 + 0] / 255.0, row[x * 3 + 1] / 255.0, row[x * 3 + 2] / 255.0};
  }
  return img;
}

void write_pfm(const std::string& path, const DepthImage& image) {
  std::ofstream f = open_out(path);
  f << "Pf\n" << image.width << " " << image.height << "\n-1.0\n";
  // PFM stores rows bottom-up.
  std::vector<float> row(image.width);
  for (int y = image.height - 1; y >= 0; --y) {
    for (int x = 0; x < image.width; ++x) row[x] = static_cast<float>(image.at(x, y));
    f.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
  }
  if (!f) throw IoError("write failed: " + path);
}

DepthImage read_pfm(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string magic;
  int w, h;
  double scale;
  f >> magic >> w >> h >> scale;
  if (magic != "Pf" || w <= 0 || h <= 0 || scale >= 0.0)
    throw IoError("unsupported PFM: " + path);
  f.get();
  DepthImage img(w, h);
  std::vector<float> row(w);
  for (int y = h - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
    if (!f) throw IoError("truncated PFM: " + path);
    for (int x = 0; x < w; ++x) img.at(x, y) = row[x];
  }
  return img;
}

namespace {

void png_chunk(std::ofstream& f, const char type[4], const std::vector<uint8_t>& data) {
  auto be32 = [](uint32_t v) {
    return std::array<uint8_t, 4>{static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                                  static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
  };
  const auto len = be32(static_cast<uint32_t>(data.size()));
  f.write(reinterpret_cast<const char*>(len.data()), 4);
  f.write(type, 4);
  if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), data.size());
  uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  const auto c = be32(crc);
  f.write(reinterpret_cast<const char*>(c.data()), 4);
}

}  // namespace

void write_png(const std::string& path, const Image& image) {
  std::ofstream f = open_out(path);
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  f.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<uint8_t> ihdr(13);
  auto put32 = [&](size_t off, uint32_t v) {
    ihdr[off] = v >> 24;
    ihdr[off + 1] = v >> 16;
    ihdr[off + 2] = v >> 8;
    ihdr[off + 3] = v;
  };
  put32(0, image.width);
  put32(4, image.height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // RGB
  ihdr[10] = ihdr[11] = ihdr[12] = 0;
  png_chunk(f, "IHDR", ihdr);

  // filter byte 0 per scanline
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(image.height) * (1 + 3 * image.width));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    for (int x = 0; x < image.width; ++x) {
      const Vec3& p = image.at(x, y);
      raw.push_back(to_byte(p.x));
      raw.push_back(to_byte(p.y));
      raw.push_back(to_byte(p.z));
    }
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("png deflate failed: " + path);
  compressed.resize(bound);
  png_chunk(f, "IDAT", compressed);
  png_chunk(f, "IEND", {});
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace rfl
