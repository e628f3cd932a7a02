#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camdist/camera.h"
#include "camdist/raster.h"
#include "camdist/tracking.h"
#include "json.hpp"

namespace camdist {

inline constexpr double kDefaultDepthCapM = 25.0;
inline constexpr double kDefaultTpThresholdM = 2.2;

struct DepthReport {
  double rms = 0.0;
  double rel = 0.0;
  double mae = 0.0;
  double me = 0.0;
  size_t n_valid = 0;
};

// RMS, Rel, MAE, ME over paired values. Throws on empty or unequal input.
DepthReport ComputeErrorMetrics(std::span<const double> pred,
                                std::span<const double> gt);

// Over pixels valid in both rasters with ground truth below cap_m.
DepthReport ComputeDepthMetrics(const DepthMap& pred, const DepthMap& gt,
                                double cap_m = kDefaultDepthCapM);

struct InstanceValue {
  std::string id;
  double distance_m = 0.0;
};

// Pairs by id; both lists must hold the same id set.
DepthReport ComputeInstanceDepthMetrics(std::span<const InstanceValue> pred,
                                        std::span<const InstanceValue> gt);

struct SceneInstances {
  std::vector<InstanceValue> pred;
  std::vector<InstanceValue> gt;
};
std::map<std::string, DepthReport> ComputePerSceneInstanceMetrics(
    const std::map<std::string, SceneInstances>& scenes);

// Linear-interpolated quartiles (the percentile convention of most plotting
// tools).
struct QuartileSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  size_t n = 0;
};
QuartileSummary ComputeQuartiles(std::vector<double> values);

// A track reference point with an axis-aligned 3D extent.
struct TrackPoint {
  int id = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extent = Eigen::Vector3d::Zero();
};

// Box center unprojected at depth z. The extent spans the unprojected box in
// x and y and the box's metric width in z.
TrackPoint TrackPointFromBox(int id, const Box& bbox, double z,
                             const CameraIntrinsics& intrinsics);

double Iou3d(const TrackPoint& a, const TrackPoint& b);

struct FrameTracks {
  int frame_id = 0;
  std::vector<TrackPoint> points;
};

struct FrameMatch {
  int gt_index = 0;
  int pred_index = 0;
  double distance = 0.0;
};

// Minimum total 3D distance assignment; pairs at or beyond the threshold are
// dropped afterwards.
std::vector<FrameMatch> MatchFrame(std::span<const TrackPoint> gt,
                                   std::span<const TrackPoint> pred,
                                   double tp_threshold_m);

struct MotReport {
  double mota = 0.0;
  double motp_m = 0.0;
  double motp_iou3d = 0.0;
  double precision = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int ids = 0;
  int num_gt = 0;
};

// CLEAR-MOT over frame-aligned sequences (same frame ids, same order).
MotReport ComputeMotMetrics(std::span<const FrameTracks> pred,
                            std::span<const FrameTracks> gt,
                            double tp_threshold_m = kDefaultTpThresholdM);

nlohmann::json ToJson(const DepthReport& report);
nlohmann::json ToJson(const MotReport& report);
nlohmann::json ToJson(const QuartileSummary& summary);

}  // namespace camdist
