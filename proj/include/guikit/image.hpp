#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "guikit/core_model.hpp"

namespace guikit {

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

// Reads PNG, binary PPM (P6) or binary PGM (P5). Throws IoError.
RgbImage load_image(const std::string& path);

// Writes `region` of `image` as a binary PPM. The region must lie inside.
void write_ppm_region(const RgbImage& image, const BBox& region, const std::string& path);

// BT.601 luma of each pixel in `region`, row-major.
std::vector<double> grayscale_region(const RgbImage& image, const BBox& region);

}  // namespace guikit
