#include "camdist/depth_params.h"

#include "camdist/error.h"

namespace camdist {

const char* ParamSpaceName(ParamSpace space) {
  return space == ParamSpace::kDisparity ? "disparity" : "depth";
}

ParamSpace ParamSpaceFromName(const std::string& name) {
  if (name == "disparity") return ParamSpace::kDisparity;
  if (name == "depth") return ParamSpace::kDepth;
  throw ParseError("unknown parameter space '" + name + "'");
}

nlohmann::json ToJson(const AffineDepthParams& params) {
  return {{"scale", params.scale},
          {"shift", params.shift},
          {"space", ParamSpaceName(params.space)},
          {"n_frames", 1}};
}

nlohmann::json ToJson(const GlobalCalibration& calibration) {
  return {{"scale", calibration.scale},
          {"shift", calibration.shift},
          {"space", ParamSpaceName(ParamSpace::kDisparity)},
          {"n_frames", calibration.n_frames}};
}

AffineDepthParams AffineDepthParamsFromJson(const nlohmann::json& j) {
  try {
    AffineDepthParams params;
    params.scale = j.at("scale").get<double>();
    params.shift = j.at("shift").get<double>();
    params.space = ParamSpaceFromName(j.value("space", std::string("depth")));
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("affine parameters: ") + e.what());
  }
}

GlobalCalibration GlobalCalibrationFromJson(const nlohmann::json& j) {
  try {
    GlobalCalibration calibration;
    calibration.scale = j.at("scale").get<double>();
    calibration.shift = j.at("shift").get<double>();
    calibration.n_frames = j.value("n_frames", 1);
    if (j.contains("space") &&
        ParamSpaceFromName(j.at("space").get<std::string>()) !=
            ParamSpace::kDisparity) {
      throw ParseError("global calibration must be in disparity space");
    }
    if (calibration.n_frames < 1) {
      throw ParseError("global calibration: n_frames must be >= 1");
    }
    return calibration;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("global calibration: ") + e.what());
  }
}

}  // namespace camdist
