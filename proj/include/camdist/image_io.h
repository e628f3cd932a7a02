#pragma once

#include <filesystem>
#include <vector>

#include "camdist/raster.h"

namespace camdist {

// Raw PFM contents. Rows are stored top-down here regardless of the
// bottom-up order on disk.
struct PfmImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;
};

PfmImage ReadPfm(const std::filesystem::path& path);
// Always writes little-endian (negative scale), bottom-up rows.
void WritePfm(const std::filesystem::path& path, const PfmImage& image);

// Single-channel PFM <-> double raster (first channel of color files).
Raster<double> ReadPfmRaster(const std::filesystem::path& path);
void WritePfmRaster(const std::filesystem::path& path,
                    const Raster<double>& raster);

// Non-finite samples are invalid; invalid pixels are written as NaN.
DisparityMap ReadDisparityPfm(const std::filesystem::path& path);
void WriteDisparityPfm(const std::filesystem::path& path,
                       const DisparityMap& disparity);

// 16-bit grayscale PNG holding depth in millimeters; 0 is invalid.
DepthMap ReadDepthPng16(const std::filesystem::path& path, DepthKind kind);
void WriteDepthPng16(const std::filesystem::path& path, const DepthMap& depth);

// Millimeter encoding used by the PNG16 format. Depths that round to 0 or
// beyond 65535 mm encode as 0 (invalid).
uint16_t EncodeDepthMillimeters(double depth_m);
// The exact raster a write/read round trip through PNG16 produces.
DepthMap QuantizeToMillimeters(const DepthMap& depth);

}  // namespace camdist
