#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "camdist/camera.h"
#include "camdist/raster.h"

namespace camdist {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2i> source_pixels;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Pinhole back-projection: x = (u - u0) / f * d, y = (v - v0) / f * d, z = d.
Eigen::Vector3d UnprojectPixel(double u, double v, double depth,
                               const CameraIntrinsics& intrinsics);
Eigen::Vector2d ProjectPoint(const Eigen::Vector3d& point,
                             const CameraIntrinsics& intrinsics);

// One point per valid pixel, in row-major pixel order.
PointCloud Unproject(const DepthMap& depth, const CameraIntrinsics& intrinsics);

// ASCII PLY with float properties x, y, z. Throws on an empty cloud.
void WritePlyAscii(const PointCloud& cloud, const std::filesystem::path& path);
// Reads vertices back; source pixels are not stored in the file.
PointCloud ReadPlyAscii(const std::filesystem::path& path);

}  // namespace camdist
