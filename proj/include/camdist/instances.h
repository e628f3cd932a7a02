#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camdist/raster.h"
#include "json.hpp"

namespace camdist {

// Box in normalized [0, 1] image coordinates, top-left corner plus extent.
struct NormalizedBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

// Integer pixel rectangle covering columns [x, x + w) and rows [y, y + h).
struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int x_end() const { return x + w; }
  int y_end() const { return y + h; }
  long area() const { return static_cast<long>(w) * h; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool Contains(int u, int v) const {
    return u >= x && u < x_end() && v >= y && v < y_end();
  }
  bool Contains(const PixelRect& other) const {
    return other.x >= x && other.y >= y && other.x_end() <= x_end() &&
           other.y_end() <= y_end();
  }

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct Detection {
  NormalizedBox bbox;
  double confidence = 0.0;
  std::string category;
  int frame_id = 0;
  // Position in the source file's detection list, kept stable across
  // confidence filtering so per-detection side files stay addressable.
  int det_index = 0;
};

// Pixel rectangle of a normalized box. Edges within 1e-6 px of an integer
// snap to it; otherwise the rectangle grows outward to whole pixels.
PixelRect ToPixelRect(const NormalizedBox& box, ImageSize image);
PixelRect ClipRect(const PixelRect& rect, ImageSize image);

// Box doubled in width and height about its center, clipped to the image.
PixelRect ExpandBbox(const Detection& detection, ImageSize image);

// Attention raster covering the crop rectangle `crop` in full-image pixels.
// The raster resolution may differ from the crop size; pixels are looked up
// by nearest neighbor.
struct AttentionMap {
  Raster<double> values;
  PixelRect crop;

  double At(int u, int v) const;  // full-image pixel inside `crop`
};

struct InstanceMask {
  std::vector<Eigen::Vector2i> pixels;  // full-image (u, v)
  Detection detection;
  PixelRect bbox;  // unexpanded detection rectangle
};

inline constexpr double kAttentionThresholdFraction = 0.10;

// Pixels of the detection rectangle whose attention is at least 10% of the
// crop's maximum. An all-zero map selects nothing.
InstanceMask ThresholdAttention(const AttentionMap& attention,
                                const Detection& detection, ImageSize image);

// Mask covering the whole detection rectangle.
InstanceMask BboxMask(const Detection& detection, ImageSize image);

struct InstanceDistance {
  double distance_m = 0.0;
  int n_pixels = 0;
  bool fallback_used = false;
};

// Even counts average the two middle values. Throws on empty input.
double Median(std::vector<double> values);

// Median metric depth over valid mask pixels. When none are valid, falls back
// to all valid pixels of the detection rectangle and flags it.
InstanceDistance ComputeInstanceDistance(const InstanceMask& mask,
                                         const DepthMap& depth);

struct DetectionIngestOptions {
  double confidence_floor = 0.2;
};

struct ImageDetections {
  std::string file;
  std::string stem;
  int frame_id = 0;
  std::vector<Detection> detections;
};

// MegaDetector batch-output documents:
//   {"images":[{"file": s, "detections":[{"category": s, "conf": f,
//                                         "bbox":[x,y,w,h]}]}]}
// Images are ordered by file stem; frame_id is the position in that order.
std::vector<ImageDetections> ParseDetections(
    const nlohmann::json& document, const DetectionIngestOptions& options);
std::vector<ImageDetections> IngestDetections(
    const std::filesystem::path& path, const DetectionIngestOptions& options);
nlohmann::json DetectionsToJson(const std::vector<ImageDetections>& images);

}  // namespace camdist
