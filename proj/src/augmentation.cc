#include "camdist/augmentation.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "camdist/error.h"
#include "camdist/rng.h"

namespace camdist {
namespace {

constexpr uint64_t kFlipStream = 1;
constexpr uint64_t kCropStream = 2;
constexpr uint64_t kScaleStream = 3;

DepthMap MirrorColumns(const DepthMap& depth) {
  DepthMap out(depth.width(), depth.height(), depth.kind);
  const int w = depth.width();
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < w; ++u) {
      out.values(u, v) = depth.values(w - 1 - u, v);
      out.valid(u, v) = depth.valid(w - 1 - u, v);
    }
  }
  return out;
}

DepthMap CropRaster(const DepthMap& depth, int origin_u, int origin_v,
                    ImageSize size) {
  DepthMap out(size.width, size.height, depth.kind);
  for (int v = 0; v < size.height; ++v) {
    for (int u = 0; u < size.width; ++u) {
      out.values(u, v) = depth.values(origin_u + u, origin_v + v);
      out.valid(u, v) = depth.valid(origin_u + u, origin_v + v);
    }
  }
  return out;
}

// Scales the valid values of a crop by s and resamples it (nearest
// neighbor) onto the target grid.
DepthMap ScaleAndResize(const DepthMap& depth, int origin_u, int origin_v,
                        ImageSize crop, ImageSize target, double s) {
  DepthMap out(target.width, target.height, depth.kind);
  for (int v = 0; v < target.height; ++v) {
    const int sv = origin_v + std::min(crop.height - 1,
                                       static_cast<int>(std::floor(
                                           (v + 0.5) * crop.height / target.height)));
    for (int u = 0; u < target.width; ++u) {
      const int su = origin_u + std::min(crop.width - 1,
                                         static_cast<int>(std::floor(
                                             (u + 0.5) * crop.width / target.width)));
      if (depth.IsValid(su, sv)) out.Set(u, v, depth.Value(su, sv) * s);
    }
  }
  return out;
}

void RefreshFov(CameraIntrinsics& intrinsics) {
  if (intrinsics.hfov_deg) {
    intrinsics.hfov_deg = 2.0 *
                          std::atan(intrinsics.width * 0.5 / intrinsics.focal_px) *
                          180.0 / std::numbers::pi;
  }
}

}  // namespace

void AugSample::Validate() const {
  if (approx_depth.size() != gt_depth.size() ||
      approx_depth.size() != intrinsics.size()) {
    throw DimensionMismatchError(
        "augmentation sample: rasters and intrinsics disagree in size");
  }
  intrinsics.Validate();
}

AugSample FlipHorizontal(const AugSample& sample) {
  sample.Validate();
  AugSample out{MirrorColumns(sample.approx_depth),
                MirrorColumns(sample.gt_depth), sample.intrinsics};
  out.intrinsics.u0 = sample.intrinsics.width - 1 - sample.intrinsics.u0;
  return out;
}

bool FlipDecision(uint64_t seed) {
  return Rng(DeriveSeed(seed, kFlipStream)).Bernoulli(0.5);
}

AugSample RandomFlipHorizontal(const AugSample& sample, uint64_t seed) {
  if (FlipDecision(seed)) return FlipHorizontal(sample);
  sample.Validate();
  return sample;
}

ImageSize MaxCropSize(ImageSize image, CropAspect aspect) {
  const int aw = aspect == CropAspect::k16x9 ? 16 : 4;
  const int ah = aspect == CropAspect::k16x9 ? 9 : 3;
  const int k = std::min(image.width / aw, image.height / ah);
  if (k <= 0) {
    throw InvalidArgumentError("image too small for the requested aspect crop");
  }
  return {aw * k, ah * k};
}

AugSample CropToAspect(const AugSample& sample, CropAspect aspect, int origin_u,
                       int origin_v) {
  sample.Validate();
  const ImageSize crop = MaxCropSize(sample.intrinsics.size(), aspect);
  if (origin_u < 0 || origin_v < 0 ||
      origin_u + crop.width > sample.intrinsics.width ||
      origin_v + crop.height > sample.intrinsics.height) {
    throw InvalidArgumentError("crop window leaves the image");
  }
  AugSample out{CropRaster(sample.approx_depth, origin_u, origin_v, crop),
                CropRaster(sample.gt_depth, origin_u, origin_v, crop),
                sample.intrinsics};
  out.intrinsics.width = crop.width;
  out.intrinsics.height = crop.height;
  out.intrinsics.u0 -= origin_u;
  out.intrinsics.v0 -= origin_v;
  RefreshFov(out.intrinsics);
  return out;
}

AugSample RandomCropAspect(const AugSample& sample, uint64_t seed) {
  sample.Validate();
  Rng rng(DeriveSeed(seed, kCropStream));
  CropAspect aspect = rng.Bernoulli(0.5) ? CropAspect::k16x9 : CropAspect::k4x3;
  const ImageSize image = sample.intrinsics.size();
  ImageSize crop;
  try {
    crop = MaxCropSize(image, aspect);
  } catch (const InvalidArgumentError&) {
    aspect = aspect == CropAspect::k16x9 ? CropAspect::k4x3 : CropAspect::k16x9;
    crop = MaxCropSize(image, aspect);
  }
  const int origin_u = static_cast<int>(
      rng.UniformInt(static_cast<uint64_t>(image.width - crop.width + 1)));
  const int origin_v = static_cast<int>(
      rng.UniformInt(static_cast<uint64_t>(image.height - crop.height + 1)));
  return CropToAspect(sample, aspect, origin_u, origin_v);
}

AugSample ScaleDepth(const AugSample& sample, double s) {
  sample.Validate();
  if (!(s > 0.0 && s <= 1.0)) {
    throw InvalidArgumentError("depth scale factor must lie in (0, 1]");
  }
  const ImageSize image = sample.intrinsics.size();
  const ImageSize crop{
      std::clamp(static_cast<int>(std::lround(s * image.width)), 1, image.width),
      std::clamp(static_cast<int>(std::lround(s * image.height)), 1,
                 image.height)};
  const int origin_u = (image.width - crop.width) / 2;
  const int origin_v = (image.height - crop.height) / 2;
  AugSample out{
      ScaleAndResize(sample.approx_depth, origin_u, origin_v, crop, image, s),
      ScaleAndResize(sample.gt_depth, origin_u, origin_v, crop, image, s),
      sample.intrinsics};
  out.intrinsics.focal_px = sample.intrinsics.focal_px / s;
  out.intrinsics.u0 = (sample.intrinsics.u0 - origin_u + 0.5) * image.width /
                          crop.width -
                      0.5;
  out.intrinsics.v0 = (sample.intrinsics.v0 - origin_v + 0.5) * image.height /
                          crop.height -
                      0.5;
  RefreshFov(out.intrinsics);
  return out;
}

double DrawDepthScale(uint64_t seed) {
  return Rng(DeriveSeed(seed, kScaleStream))
      .Uniform(kMinDepthScale, kMaxDepthScale);
}

AugSample RandomScaleDepth(const AugSample& sample, uint64_t seed) {
  return ScaleDepth(sample, DrawDepthScale(seed));
}

}  // namespace camdist
