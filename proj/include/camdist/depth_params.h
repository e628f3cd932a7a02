#pragma once

#include <string>

#include "json.hpp"

namespace camdist {

// Which relation a (scale, shift) pair parameterizes:
//   kDisparity: inverse depth = scale * disparity + shift
//   kDepth:     depth = scale * approximate_depth + shift
enum class ParamSpace { kDisparity, kDepth };

const char* ParamSpaceName(ParamSpace space);
ParamSpace ParamSpaceFromName(const std::string& name);

struct AffineDepthParams {
  double scale = 1.0;
  double shift = 0.0;
  ParamSpace space = ParamSpace::kDepth;
};

// Dataset-wide disparity calibration, the mean of per-frame disparity fits.
struct GlobalCalibration {
  double scale = 1.0;
  double shift = 0.0;
  int n_frames = 1;
};

// Both serialize to {scale, shift, space, n_frames}.
nlohmann::json ToJson(const AffineDepthParams& params);
nlohmann::json ToJson(const GlobalCalibration& calibration);
AffineDepthParams AffineDepthParamsFromJson(const nlohmann::json& j);
GlobalCalibration GlobalCalibrationFromJson(const nlohmann::json& j);

}  // namespace camdist
