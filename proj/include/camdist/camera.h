#pragma once

#include <optional>

#include <Eigen/Core>
#include "json.hpp"

#include "camdist/raster.h"

namespace camdist {

// Focal length in pixels from the horizontal opening angle:
//   f = width / 2 / tan(hfov / 2).
// Throws InvalidArgumentError unless width_px > 0 and 0 < hfov_deg < 180.
double FocalFromFov(int width_px, double hfov_deg);

// Pinhole intrinsics. No distortion.
struct CameraIntrinsics {
  double focal_px = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;
  int width = 0;
  int height = 0;
  // Carried along when the camera was described by its opening angle.
  std::optional<double> hfov_deg;

  // Principal point defaults to the pixel-grid center ((w-1)/2, (h-1)/2).
  static CameraIntrinsics FromFocal(
      int width, int height, double focal_px,
      std::optional<Eigen::Vector2d> principal_point = std::nullopt);
  static CameraIntrinsics FromFov(
      int width, int height, double hfov_deg,
      std::optional<Eigen::Vector2d> principal_point = std::nullopt);

  ImageSize size() const { return {width, height}; }

  // Relative difference between focal_px and the focal implied by hfov_deg;
  // zero when no FOV is attached. Supplied focal values win, callers decide
  // whether to warn.
  double FovDiscrepancy() const;

  void Validate() const;
};

nlohmann::json IntrinsicsToJson(const CameraIntrinsics& intrinsics);
CameraIntrinsics IntrinsicsFromJson(const nlohmann::json& j);

}  // namespace camdist
