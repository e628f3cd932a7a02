#include "camdist/image_io.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include <png.h>

#include "camdist/error.h"

namespace camdist {
namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr OpenFile(const std::filesystem::path& path, const char* mode) {
  FilePtr file(std::fopen(path.c_str(), mode));
  if (!file) {
    throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  }
  return file;
}

uint32_t ByteSwap(uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0x0000ff00u) | ((x << 8) & 0x00ff0000u) |
         (x << 24);
}

// Reads one whitespace-delimited header token.
std::string NextToken(std::istream& in) {
  std::string token;
  in >> token;
  return token;
}

}  // namespace

PfmImage ReadPfm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  const std::string magic = NextToken(file);
  PfmImage image;
  if (magic == "Pf") {
    image.channels = 1;
  } else if (magic == "PF") {
    image.channels = 3;
  } else {
    throw ParseError(path.string() + ": not a PFM file");
  }
  double scale = 0.0;
  if (!(file >> image.width >> image.height >> scale) || image.width <= 0 ||
      image.height <= 0 || scale == 0.0) {
    throw ParseError(path.string() + ": malformed PFM header");
  }
  // Exactly one whitespace byte separates the header from the data.
  file.get();
  const bool little_endian = scale < 0.0;
  const size_t row_len = static_cast<size_t>(image.width) * image.channels;
  std::vector<float> raw(row_len * image.height);
  file.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (file.gcount() !=
      static_cast<std::streamsize>(raw.size() * sizeof(float))) {
    throw ParseError(path.string() + ": truncated PFM data");
  }
  const bool host_little = std::endian::native == std::endian::little;
  if (little_endian != host_little) {
    for (float& f : raw) {
      f = std::bit_cast<float>(ByteSwap(std::bit_cast<uint32_t>(f)));
    }
  }
  image.data.resize(raw.size());
  for (int row = 0; row < image.height; ++row) {
    // Bottom-up on disk.
    const float* src = raw.data() + row_len * (image.height - 1 - row);
    std::copy(src, src + row_len, image.data.data() + row_len * row);
  }
  return image;
}

void WritePfm(const std::filesystem::path& path, const PfmImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw InvalidArgumentError("WritePfm: channels must be 1 or 3");
  }
  const size_t row_len = static_cast<size_t>(image.width) * image.channels;
  if (image.data.size() != row_len * image.height) {
    throw DimensionMismatchError("WritePfm: data size does not match header");
  }
  FilePtr file = OpenFile(path, "wb");
  std::fprintf(file.get(), "%s\n%d %d\n-1.0\n",
               image.channels == 1 ? "Pf" : "PF", image.width, image.height);
  std::vector<float> row(row_len);
  for (int r = image.height - 1; r >= 0; --r) {
    const float* src = image.data.data() + row_len * r;
    if constexpr (std::endian::native == std::endian::little) {
      std::copy(src, src + row_len, row.begin());
    } else {
      for (size_t i = 0; i < row_len; ++i) {
        row[i] = std::bit_cast<float>(ByteSwap(std::bit_cast<uint32_t>(src[i])));
      }
    }
    if (std::fwrite(row.data(), sizeof(float), row_len, file.get()) != row_len) {
      throw IoError("failed writing " + path.string());
    }
  }
  if (std::fflush(file.get()) != 0) {
    throw IoError("failed writing " + path.string());
  }
}

Raster<double> ReadPfmRaster(const std::filesystem::path& path) {
  const PfmImage image = ReadPfm(path);
  Raster<double> raster(image.width, image.height);
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      raster(u, v) = image.data[(static_cast<size_t>(v) * image.width + u) *
                                image.channels];
    }
  }
  return raster;
}

void WritePfmRaster(const std::filesystem::path& path,
                    const Raster<double>& raster) {
  PfmImage image;
  image.width = raster.width();
  image.height = raster.height();
  image.channels = 1;
  image.data.assign(raster.data().begin(), raster.data().end());
  WritePfm(path, image);
}

DisparityMap ReadDisparityPfm(const std::filesystem::path& path) {
  const Raster<double> raster = ReadPfmRaster(path);
  DisparityMap disparity(raster.width(), raster.height());
  for (int v = 0; v < raster.height(); ++v) {
    for (int u = 0; u < raster.width(); ++u) {
      if (std::isfinite(raster(u, v))) disparity.Set(u, v, raster(u, v));
    }
  }
  return disparity;
}

void WriteDisparityPfm(const std::filesystem::path& path,
                       const DisparityMap& disparity) {
  Raster<double> raster(disparity.width(), disparity.height(),
                        std::numeric_limits<double>::quiet_NaN());
  for (int v = 0; v < disparity.height(); ++v) {
    for (int u = 0; u < disparity.width(); ++u) {
      if (disparity.IsValid(u, v)) raster(u, v) = disparity.Value(u, v);
    }
  }
  WritePfmRaster(path, raster);
}

uint16_t EncodeDepthMillimeters(double depth_m) {
  if (!std::isfinite(depth_m) || depth_m <= 0.0) return 0;
  const double mm = std::round(depth_m * 1000.0);
  if (mm < 1.0 || mm > 65535.0) return 0;
  return static_cast<uint16_t>(mm);
}

DepthMap QuantizeToMillimeters(const DepthMap& depth) {
  DepthMap out(depth.width(), depth.height(), depth.kind);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.IsValid(u, v)) continue;
      const uint16_t mm = EncodeDepthMillimeters(depth.Value(u, v));
      if (mm != 0) out.Set(u, v, mm / 1000.0);
    }
  }
  return out;
}

namespace {

[[noreturn]] void PngError(png_structp png, png_const_charp message) {
  auto* context = static_cast<std::string*>(png_get_error_ptr(png));
  if (context) *context = message;
  png_longjmp(png, 1);
}

void PngWarning(png_structp, png_const_charp) {}

}  // namespace

DepthMap ReadDepthPng16(const std::filesystem::path& path, DepthKind kind) {
  FilePtr file = OpenFile(path, "rb");
  std::string error_message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING,
                                           &error_message, PngError, PngWarning);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  // Declared before setjmp so the longjmp target sees a consistent object.
  DepthMap depth;
  std::vector<uint16_t> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(path.string() + ": " + error_message);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(path.string() +
                     ": depth PNG must be 16-bit single-channel grayscale");
  }
  if constexpr (std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  depth = DepthMap(static_cast<int>(width), static_cast<int>(height), kind);
  row.resize(width);
  for (png_uint_32 v = 0; v < height; ++v) {
    png_read_row(png, reinterpret_cast<png_bytep>(row.data()), nullptr);
    for (png_uint_32 u = 0; u < width; ++u) {
      if (row[u] != 0) depth.Set(u, v, row[u] / 1000.0);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return depth;
}

void WriteDepthPng16(const std::filesystem::path& path, const DepthMap& depth) {
  if (depth.width() <= 0 || depth.height() <= 0) {
    throw InvalidArgumentError("WriteDepthPng16: empty raster");
  }
  std::vector<uint16_t> pixels(depth.values.num_pixels(), 0);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (depth.IsValid(u, v)) {
        pixels[static_cast<size_t>(v) * depth.width() + u] =
            EncodeDepthMillimeters(depth.Value(u, v));
      }
    }
  }
  FilePtr file = OpenFile(path, "wb");
  std::string error_message;
  png_structp png = png_create_write_struct(
      PNG_LIBPNG_VER_STRING, &error_message, PngError, PngWarning);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: cannot create info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string() + ": " + error_message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, depth.width(), depth.height(), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if constexpr (std::endian::native == std::endian::little) png_set_swap(png);
  for (int v = 0; v < depth.height(); ++v) {
    png_write_row(png, reinterpret_cast<png_const_bytep>(
                           pixels.data() + static_cast<size_t>(v) * depth.width()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) {
    throw IoError("failed writing " + path.string());
  }
}

}  // namespace camdist
