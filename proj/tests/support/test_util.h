#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camdist/raster.h"
#include "camdist/rng.h"
#include "camdist/synth.h"

namespace camdist::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Row-major values; NaN entries become invalid pixels.
DepthMap MakeDepth(int width, int height, const std::vector<double>& values,
                   DepthKind kind = DepthKind::kMetric);
DisparityMap MakeDisparity(int width, int height,
                           const std::vector<double>& values);

// Uniform depths in [lo, hi) with a fraction of invalid pixels.
DepthMap RandomDepth(Rng& rng, int width, int height, double lo, double hi,
                     double invalid_frac = 0.0,
                     DepthKind kind = DepthKind::kMetric);

std::string ReadBytes(const std::filesystem::path& path);

// Every regular file under `dir`, keyed by relative path, with its contents.
std::vector<std::pair<std::string, std::string>> SnapshotTree(
    const std::filesystem::path& dir);

// Animal of the given size standing on the ground plane of `spec` at
// lateral offset x and depth z, moving with `velocity`.
AnimalSpec StandingAnimal(const SceneSpec& spec, double width_m,
                          double height_m, double x, double z,
                          const Eigen::Vector3d& velocity =
                              Eigen::Vector3d::Zero());

// A 200x100 camera (or the given size) with a 90 degree field of view.
CameraIntrinsics TestCamera(int width = 200, int height = 100);

}  // namespace camdist::testing
