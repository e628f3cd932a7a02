#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace camdist {

struct ImageSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Row-major 2D raster, origin top-left, indexed as (u, v) = (column, row).
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width),
        height_(height),
        data_(static_cast<size_t>(width) * static_cast<size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  ImageSize size() const { return {width_, height_}; }
  size_t num_pixels() const { return data_.size(); }

  T& operator()(int u, int v) { return data_[Index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[Index(u, v)]; }

  bool InBounds(int u, int v) const {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  size_t Index(int u, int v) const {
    return static_cast<size_t>(v) * static_cast<size_t>(width_) +
           static_cast<size_t>(u);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// A double raster paired with a per-pixel validity mask. Values of invalid
// pixels are unspecified and must not be read as data.
class MaskedRaster {
 public:
  MaskedRaster() = default;
  MaskedRaster(int width, int height)
      : values(width, height, 0.0), valid(width, height, 0) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  ImageSize size() const { return values.size(); }

  bool IsValid(int u, int v) const { return valid(u, v) != 0; }
  double Value(int u, int v) const { return values(u, v); }

  void Set(int u, int v, double value) {
    values(u, v) = value;
    valid(u, v) = 1;
  }
  void Invalidate(int u, int v) { valid(u, v) = 0; }

  size_t CountValid() const;

  Raster<double> values;
  Raster<uint8_t> valid;
};

// Relative disparity output of a monocular depth network (unitless).
class DisparityMap : public MaskedRaster {
 public:
  using MaskedRaster::MaskedRaster;
};

enum class DepthKind { kApproximate, kMetric, kGroundTruth };

const char* DepthKindName(DepthKind kind);

// Depth raster in meters; valid pixels are finite and strictly positive.
class DepthMap : public MaskedRaster {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, DepthKind kind)
      : MaskedRaster(width, height), kind(kind) {}

  DepthKind kind = DepthKind::kMetric;
};

}  // namespace camdist
