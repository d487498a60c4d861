#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace pointseg {

// Dense H x W x C raster, row-major with interleaved channels, values
// in [0, 1]. Grayscale rasters have channels == 1, color has 3.
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Raster() = default;
  Raster(int h, int w, int c, float fill = 0.0f)
      : height(h),
        width(w),
        channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  float& at(int r, int c, int ch = 0) {
    return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }
  float at(int r, int c, int ch = 0) const {
    return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }

  std::size_t size() const { return data.size(); }
};

// Reads an 8-bit grayscale or RGB PNG. Sample values map to v / 255.
// Throws IoError if the file cannot be opened, FormatError for anything
// that is not an 8-bit gray or RGB PNG.
Raster load_png(const std::filesystem::path& path);

// Writes an 8-bit PNG: 1 channel as grayscale, 3 as RGB. Values are
// clamped to [0, 1] and quantized as round(v * 255).
void save_png(const Raster& raster, const std::filesystem::path& path);

}  // namespace pointseg
