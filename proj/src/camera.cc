#include "camdist/camera.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "camdist/error.h"

namespace camdist {

double FocalFromFov(int width_px, double hfov_deg) {
  if (width_px <= 0) {
    throw InvalidArgumentError("FocalFromFov: width must be positive");
  }
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) {
    std::ostringstream msg;
    msg << "FocalFromFov: hfov_deg must lie in (0, 180), got " << hfov_deg;
    throw InvalidArgumentError(msg.str());
  }
  return width_px * 0.5 / std::tan(hfov_deg * 0.5 * std::numbers::pi / 180.0);
}

CameraIntrinsics CameraIntrinsics::FromFocal(
    int width, int height, double focal_px,
    std::optional<Eigen::Vector2d> principal_point) {
  CameraIntrinsics intrinsics;
  intrinsics.width = width;
  intrinsics.height = height;
  intrinsics.focal_px = focal_px;
  if (principal_point) {
    intrinsics.u0 = principal_point->x();
    intrinsics.v0 = principal_point->y();
  } else {
    intrinsics.u0 = (width - 1) * 0.5;
    intrinsics.v0 = (height - 1) * 0.5;
  }
  intrinsics.Validate();
  return intrinsics;
}

CameraIntrinsics CameraIntrinsics::FromFov(
    int width, int height, double hfov_deg,
    std::optional<Eigen::Vector2d> principal_point) {
  CameraIntrinsics intrinsics = FromFocal(
      width, height, FocalFromFov(width, hfov_deg), principal_point);
  intrinsics.hfov_deg = hfov_deg;
  return intrinsics;
}

double CameraIntrinsics::FovDiscrepancy() const {
  if (!hfov_deg) return 0.0;
  const double expected = FocalFromFov(width, *hfov_deg);
  return std::abs(focal_px - expected) / expected;
}

void CameraIntrinsics::Validate() const {
  if (width <= 0 || height <= 0) {
    throw InvalidArgumentError("intrinsics: width and height must be positive");
  }
  if (!(focal_px > 0.0) || !std::isfinite(focal_px)) {
    throw InvalidArgumentError("intrinsics: focal_px must be positive");
  }
  if (!std::isfinite(u0) || !std::isfinite(v0)) {
    throw InvalidArgumentError("intrinsics: principal point must be finite");
  }
  if (hfov_deg && !(*hfov_deg > 0.0 && *hfov_deg < 180.0)) {
    throw InvalidArgumentError("intrinsics: hfov_deg must lie in (0, 180)");
  }
}

nlohmann::json IntrinsicsToJson(const CameraIntrinsics& intrinsics) {
  nlohmann::json j = {
      {"width", intrinsics.width},
      {"height", intrinsics.height},
      {"focal_px", intrinsics.focal_px},
      {"principal_point", {intrinsics.u0, intrinsics.v0}},
  };
  if (intrinsics.hfov_deg) j["hfov_deg"] = *intrinsics.hfov_deg;
  return j;
}

CameraIntrinsics IntrinsicsFromJson(const nlohmann::json& j) {
  try {
    const int width = j.at("width").get<int>();
    const int height = j.at("height").get<int>();
    std::optional<Eigen::Vector2d> principal_point;
    if (j.contains("principal_point")) {
      const auto& pp = j.at("principal_point");
      if (!pp.is_array() || pp.size() != 2) {
        throw ParseError("intrinsics: principal_point must be [u0, v0]");
      }
      principal_point =
          Eigen::Vector2d(pp[0].get<double>(), pp[1].get<double>());
    }
    std::optional<double> hfov;
    if (j.contains("hfov_deg")) hfov = j.at("hfov_deg").get<double>();
    if (j.contains("focal_px")) {
      CameraIntrinsics intrinsics = CameraIntrinsics::FromFocal(
          width, height, j.at("focal_px").get<double>(), principal_point);
      intrinsics.hfov_deg = hfov;
      intrinsics.Validate();
      return intrinsics;
    }
    if (!hfov) {
      throw ParseError("intrinsics: need focal_px or hfov_deg");
    }
    return CameraIntrinsics::FromFov(width, height, *hfov, principal_point);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("intrinsics: ") + e.what());
  }
}

}  // namespace camdist
