#pragma once

#include <cstdint>

#include "camdist/camera.h"
#include "camdist/raster.h"

namespace camdist {

struct AugSample {
  DepthMap approx_depth;
  DepthMap gt_depth;
  CameraIntrinsics intrinsics;

  void Validate() const;
};

AugSample FlipHorizontal(const AugSample& sample);
// Flips with probability 0.5.
AugSample RandomFlipHorizontal(const AugSample& sample, uint64_t seed);
bool FlipDecision(uint64_t seed);

enum class CropAspect { k16x9, k4x3 };

// Largest crop of exactly the given aspect; throws if the input is smaller
// than one aspect unit in either direction.
ImageSize MaxCropSize(ImageSize image, CropAspect aspect);
AugSample CropToAspect(const AugSample& sample, CropAspect aspect, int origin_u,
                       int origin_v);
// Fair coin between the two aspects (falls back to the feasible one), then a
// uniformly placed maximal crop.
AugSample RandomCropAspect(const AugSample& sample, uint64_t seed);

inline constexpr double kMinDepthScale = 0.75;
inline constexpr double kMaxDepthScale = 1.0;

// Central s-fraction crop, both depth rasters multiplied by s, resized back to
// the input resolution with nearest neighbor, focal divided by s.
AugSample ScaleDepth(const AugSample& sample, double s);
AugSample RandomScaleDepth(const AugSample& sample, uint64_t seed);
double DrawDepthScale(uint64_t seed);

}  // namespace camdist
