#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "camdist/camera.h"
#include "camdist/depth_params.h"
#include "camdist/instances.h"
#include "camdist/raster.h"
#include "json.hpp"

namespace camdist {

inline constexpr double kMinAnimalDepthM = 0.5;   // exclusive
inline constexpr double kMaxAnimalDepthM = 65.0;  // inclusive

struct AnimalSpec {
  double width_m = 1.0;
  double height_m = 1.0;
  Eigen::Vector3d position = Eigen::Vector3d(0.0, 0.0, 5.0);  // camera frame
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();          // m per frame
};

struct SceneSpec {
  CameraIntrinsics intrinsics;
  double ground_height_m = 1.5;  // camera height above the ground plane
  double ground_tilt_deg = 10.0;  // downward pitch of the optical axis
  std::vector<AnimalSpec> animals;
  int n_frames = 1;
  uint64_t seed = 0;
  // Ground beyond this depth (and the sky) is invalid.
  double max_depth_m = kMaxAnimalDepthM;
  // Fraction of ground-truth pixels dropped as sensor noise.
  double dropout_frac = 0.0;

  void Validate() const;
};

struct SyntheticFrame {
  DepthMap gt_depth;
  // Parallel per visible animal, in animal order.
  std::vector<Detection> detections;
  std::vector<InstanceMask> masks;
  std::vector<AttentionMap> attention;
  std::vector<int> animal_ids;
  std::vector<double> gt_distances;
};

// Analytic ground plane plus fronto-parallel animal rectangles composited
// with a z-buffer. Masks are the visible rectangle pixels, attention maps are
// 1 on the mask and 0 elsewhere in the expanded detection crop. Animals whose
// rectangle leaves the image throw InvalidArgumentError.
std::vector<SyntheticFrame> RenderScene(const SceneSpec& spec);

// Camera-frame y of the ground point at optical depth z. An animal of height
// h stands on the ground at y = GroundContactY(spec, z) - h / 2.
double GroundContactY(const SceneSpec& spec, double z);

// Pixel rectangle of an animal at its position in the given frame.
PixelRect AnimalRect(const AnimalSpec& animal, int frame,
                     const CameraIntrinsics& intrinsics);

// disparity = (1/g - shift) / scale + N(0, noise_std), then a fraction of
// ground-truth-valid pixels replaced by uniform draws over the clean range.
// Pixels without ground truth get the farthest clean disparity.
DisparityMap SynthDisparity(const DepthMap& ground_truth,
                            const AffineDepthParams& params, double noise_std,
                            double outlier_frac, uint64_t seed);

// Validation errors name the offending field path, e.g.
// "animals[1].position[2]".
SceneSpec SceneSpecFromJson(const nlohmann::json& j);
nlohmann::json SceneSpecToJson(const SceneSpec& spec);

}  // namespace camdist
