#include "pointseg/raster.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "pointseg/errors.hpp"

namespace pointseg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  (void)png;
  throw FormatError(std::string("png: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

}  // namespace

Raster load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warn_fn);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }

  Raster out;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth != 8)
      throw FormatError(path.string() + ": unsupported bit depth " +
                        std::to_string(bit_depth) + ", expected 8");

    int channels = 0;
    if (color_type == PNG_COLOR_TYPE_GRAY) {
      channels = 1;
    } else if (color_type == PNG_COLOR_TYPE_RGB) {
      channels = 3;
    } else {
      throw FormatError(path.string() +
                        ": unsupported color type, expected 8-bit gray or RGB");
    }

    out = Raster(static_cast<int>(height), static_cast<int>(width), channels);
    std::vector<png_byte> row(static_cast<std::size_t>(width) * channels);
    for (png_uint_32 r = 0; r < height; ++r) {
      png_read_row(png, row.data(), nullptr);
      for (std::size_t i = 0; i < row.size(); ++i) {
        out.data[static_cast<std::size_t>(r) * row.size() + i] =
            static_cast<float>(row[i]) / 255.0f;
      }
    }
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void save_png(const Raster& raster, const std::filesystem::path& path) {
  if (raster.channels != 1 && raster.channels != 3)
    throw ContractError("save_png: raster must have 1 or 3 channels, got " +
                        std::to_string(raster.channels));
  if (raster.height <= 0 || raster.width <= 0)
    throw ContractError("save_png: raster has empty extent");
  if (raster.data.size() != static_cast<std::size_t>(raster.height) *
                                raster.width * raster.channels)
    throw ContractError("save_png: data size does not match dimensions");

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warn_fn);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }

  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width),
                 static_cast<png_uint_32>(raster.height), 8,
                 raster.channels == 1 ? PNG_COLOR_TYPE_GRAY
                                      : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t row_len =
        static_cast<std::size_t>(raster.width) * raster.channels;
    std::vector<png_byte> row(row_len);
    for (int r = 0; r < raster.height; ++r) {
      for (std::size_t i = 0; i < row_len; ++i) {
        float v = raster.data[static_cast<std::size_t>(r) * row_len + i];
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        row[i] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace pointseg
