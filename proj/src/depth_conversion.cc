#include "camdist/depth_conversion.h"

#include <cmath>

#include "camdist/error.h"

namespace camdist {

DepthMap DisparityToApproxDepth(const DisparityMap& disparity,
                                const GlobalCalibration& calibration) {
  if (!std::isfinite(calibration.scale) || !std::isfinite(calibration.shift)) {
    throw InvalidArgumentError("calibration scale and shift must be finite");
  }
  DepthMap approx(disparity.width(), disparity.height(),
                  DepthKind::kApproximate);
  for (int v = 0; v < disparity.height(); ++v) {
    for (int u = 0; u < disparity.width(); ++u) {
      if (!disparity.IsValid(u, v)) continue;
      const double denominator =
          disparity.Value(u, v) * calibration.scale + calibration.shift;
      if (!(denominator > kDenominatorEpsilon)) continue;
      approx.Set(u, v, 1.0 / denominator);
    }
  }
  return approx;
}

DepthMap ApplyAffineDepth(const DepthMap& approx,
                          const AffineDepthParams& params) {
  if (params.space != ParamSpace::kDepth) {
    throw InvalidArgumentError(
        "ApplyAffineDepth: parameters are not in depth space");
  }
  if (!(params.scale > 0.0) || !std::isfinite(params.scale) ||
      !std::isfinite(params.shift)) {
    throw InvalidArgumentError(
        "ApplyAffineDepth: scale must be positive and finite");
  }
  if (approx.kind != DepthKind::kApproximate) {
    throw InvalidArgumentError("ApplyAffineDepth: input is not approximate");
  }
  DepthMap metric(approx.width(), approx.height(), DepthKind::kMetric);
  for (int v = 0; v < approx.height(); ++v) {
    for (int u = 0; u < approx.width(); ++u) {
      if (!approx.IsValid(u, v)) continue;
      const double depth = params.scale * approx.Value(u, v) + params.shift;
      if (depth > 0.0 && std::isfinite(depth)) metric.Set(u, v, depth);
    }
  }
  return metric;
}

}  // namespace camdist
