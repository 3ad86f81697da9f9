#pragma once

#include <string>

#include "rfl/image.hpp"

namespace rfl {

// Binary PPM (P6, maxval 255). Linear values map to bytes via
// round(255 * clamp(v, 0, 1)); reading maps bytes back to v = byte / 255.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

// Grayscale PFM ("Pf", little-endian, scale -1), used for depth maps where
// 8-bit quantization would be lossy.
void write_pfm(const std::string& path, const DepthImage& image);
DepthImage read_pfm(const std::string& path);

// 8-bit RGB PNG via zlib. Same quantization as PPM.
void write_png(const std::string& path, const Image& image);

}  // namespace rfl
