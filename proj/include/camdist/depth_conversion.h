#pragma once

#include "camdist/depth_params.h"
#include "camdist/raster.h"

namespace camdist {

// Denominators at or below this are treated as degenerate and invalidate the
// pixel instead of producing inf/NaN or negative depth.
inline constexpr double kDenominatorEpsilon = 1e-9;

// d_approx = 1 / (disparity * scale + shift) per valid pixel.
DepthMap DisparityToApproxDepth(const DisparityMap& disparity,
                                const GlobalCalibration& calibration);

// d_metric = scale * d_approx + shift per valid pixel. Results <= 0 are
// invalidated. Requires a depth-space parameter pair with scale > 0.
DepthMap ApplyAffineDepth(const DepthMap& approx,
                          const AffineDepthParams& params);

}  // namespace camdist
