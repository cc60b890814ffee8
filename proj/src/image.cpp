#include "guikit/image.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "guikit/error.hpp"

namespace guikit {

namespace {

RgbImage load_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot decode PNG '" + path + "': " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.rgb.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError("cannot decode PNG '" + path + "': " + png.message);
  }
  return img;
}

// Skips whitespace and '#' comments in a netpbm header.
int read_pnm_int(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  return v;
}

RgbImage load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path + "'");
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw IoError("unsupported image format in '" + path + "'");
  }
  const bool gray = magic[1] == '5';
  RgbImage img;
  img.width = read_pnm_int(in);
  img.height = read_pnm_int(in);
  int maxval = read_pnm_int(in);
  if (img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw IoError("unsupported netpbm header in '" + path + "'");
  }
  in.get();
  const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
  std::vector<std::uint8_t> raw(pixels * (gray ? 1 : 3));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw IoError("truncated image data in '" + path + "'");
  }
  if (gray) {
    img.rgb.resize(pixels * 3);
    for (std::size_t i = 0; i < pixels; ++i) {
      img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = raw[i];
    }
  } else {
    img.rgb = std::move(raw);
  }
  return img;
}

void check_region(const RgbImage& image, const BBox& r) {
  if (!r.well_formed() || r.left < 0 || r.top < 0 || r.right > image.width || r.bottom > image.height) {
    throw IoError("region outside image bounds");
  }
}

}  // namespace

RgbImage load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open image '" + path + "'");
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (png_sig_cmp(sig, 0, 8) == 0) return load_png(path);
  return load_pnm(path);
}

void write_ppm_region(const RgbImage& image, const BBox& region, const std::string& path) {
  check_region(image, region);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P6\n" << region.width() << ' ' << region.height() << "\n255\n";
  for (int y = region.top; y < region.bottom; ++y) {
    const auto* row = image.rgb.data() + (static_cast<std::size_t>(y) * image.width + region.left) * 3;
    out.write(reinterpret_cast<const char*>(row), static_cast<std::streamsize>(region.width()) * 3);
  }
}

std::vector<double> grayscale_region(const RgbImage& image, const BBox& region) {
  check_region(image, region);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(region.area()));
  for (int y = region.top; y < region.bottom; ++y) {
    for (int x = region.left; x < region.right; ++x) {
      const auto* px = image.rgb.data() + (static_cast<std::size_t>(y) * image.width + x) * 3;
      out.push_back(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
    }
  }
  return out;
}

}  // namespace guikit
