#include "camdist/evaluation.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "camdist/assignment.h"
#include "camdist/error.h"
#include "camdist/point_cloud.h"

namespace camdist {

DepthReport ComputeErrorMetrics(std::span<const double> pred,
                                std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw DimensionMismatchError("error metrics: unequal value counts");
  }
  if (pred.empty()) {
    throw InsufficientDataError("error metrics: empty evaluation set");
  }
  double sq = 0.0, rel = 0.0, abs_sum = 0.0, signed_sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - gt[i];
    sq += e * e;
    rel += std::abs(e) / gt[i];
    abs_sum += std::abs(e);
    signed_sum += e;
  }
  const double n = static_cast<double>(pred.size());
  return {std::sqrt(sq / n), rel / n, abs_sum / n, signed_sum / n, pred.size()};
}

DepthReport ComputeDepthMetrics(const DepthMap& pred, const DepthMap& gt,
                                double cap_m) {
  if (pred.size() != gt.size()) {
    throw DimensionMismatchError("depth metrics: rasters differ in size");
  }
  std::vector<double> p, g;
  for (int v = 0; v < gt.height(); ++v) {
    for (int u = 0; u < gt.width(); ++u) {
      if (!pred.IsValid(u, v) || !gt.IsValid(u, v)) continue;
      if (!(gt.Value(u, v) < cap_m)) continue;
      p.push_back(pred.Value(u, v));
      g.push_back(gt.Value(u, v));
    }
  }
  if (p.empty()) {
    throw InsufficientDataError(
        "depth metrics: no jointly valid pixels below the distance cap");
  }
  return ComputeErrorMetrics(p, g);
}

DepthReport ComputeInstanceDepthMetrics(std::span<const InstanceValue> pred,
                                        std::span<const InstanceValue> gt) {
  std::unordered_map<std::string, double> gt_by_id;
  for (const InstanceValue& value : gt) {
    if (!gt_by_id.emplace(value.id, value.distance_m).second) {
      throw InvalidArgumentError("instance metrics: duplicate ground-truth id '" +
                                 value.id + "'");
    }
  }
  if (pred.size() != gt.size()) {
    std::ostringstream msg;
    msg << "instance metrics: " << pred.size() << " predictions vs "
        << gt.size() << " ground-truth instances";
    throw InvalidArgumentError(msg.str());
  }
  std::vector<double> p, g;
  std::set<std::string> seen;
  for (const InstanceValue& value : pred) {
    const auto it = gt_by_id.find(value.id);
    if (it == gt_by_id.end()) {
      throw InvalidArgumentError("instance metrics: id '" + value.id +
                                 "' has no ground truth");
    }
    if (!seen.insert(value.id).second) {
      throw InvalidArgumentError("instance metrics: duplicate prediction id '" +
                                 value.id + "'");
    }
    p.push_back(value.distance_m);
    g.push_back(it->second);
  }
  return ComputeErrorMetrics(p, g);
}

std::map<std::string, DepthReport> ComputePerSceneInstanceMetrics(
    const std::map<std::string, SceneInstances>& scenes) {
  std::map<std::string, DepthReport> reports;
  for (const auto& [name, scene] : scenes) {
    reports[name] = ComputeInstanceDepthMetrics(scene.pred, scene.gt);
  }
  return reports;
}

QuartileSummary ComputeQuartiles(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("quartiles of empty set");
  std::sort(values.begin(), values.end());
  const auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back(),
          values.size()};
}

TrackPoint TrackPointFromBox(int id, const Box& bbox, double z,
                             const CameraIntrinsics& intrinsics) {
  TrackPoint point;
  point.id = id;
  point.center =
      UnprojectPixel(bbox.center_u(), bbox.center_v(), z, intrinsics);
  const double half_w = 0.5 * bbox.w / intrinsics.focal_px * z;
  const double half_h = 0.5 * bbox.h / intrinsics.focal_px * z;
  point.half_extent = Eigen::Vector3d(half_w, half_h, half_w);
  return point;
}

double Iou3d(const TrackPoint& a, const TrackPoint& b) {
  const Eigen::Vector3d a_lo = a.center - a.half_extent;
  const Eigen::Vector3d a_hi = a.center + a.half_extent;
  const Eigen::Vector3d b_lo = b.center - b.half_extent;
  const Eigen::Vector3d b_hi = b.center + b.half_extent;
  const Eigen::Vector3d overlap =
      (a_hi.cwiseMin(b_hi) - a_lo.cwiseMax(b_lo)).cwiseMax(0.0);
  const double intersection = overlap.prod();
  const double union_volume = (2.0 * a.half_extent).prod() +
                              (2.0 * b.half_extent).prod() - intersection;
  if (!(union_volume > 0.0)) return 0.0;
  return intersection / union_volume;
}

std::vector<FrameMatch> MatchFrame(std::span<const TrackPoint> gt,
                                   std::span<const TrackPoint> pred,
                                   double tp_threshold_m) {
  std::vector<FrameMatch> matches;
  if (gt.empty() || pred.empty()) return matches;
  Eigen::MatrixXd distance(gt.size(), pred.size());
  for (size_t i = 0; i < gt.size(); ++i) {
    for (size_t j = 0; j < pred.size(); ++j) {
      distance(i, j) = (gt[i].center - pred[j].center).norm();
    }
  }
  const std::vector<int> assignment = SolveMinCostAssignment(distance);
  for (size_t i = 0; i < gt.size(); ++i) {
    const int j = assignment[i];
    if (j < 0 || !(distance(i, j) < tp_threshold_m)) continue;
    matches.push_back({static_cast<int>(i), j, distance(i, j)});
  }
  return matches;
}

namespace {

void CheckUniqueIds(const FrameTracks& frame, const char* which) {
  std::set<int> ids;
  for (const TrackPoint& p : frame.points) {
    if (!ids.insert(p.id).second) {
      std::ostringstream msg;
      msg << "mot metrics: duplicate " << which << " id " << p.id
          << " in frame " << frame.frame_id;
      throw InvalidArgumentError(msg.str());
    }
  }
}

}  // namespace

MotReport ComputeMotMetrics(std::span<const FrameTracks> pred,
                            std::span<const FrameTracks> gt,
                            double tp_threshold_m) {
  if (pred.size() != gt.size()) {
    throw DimensionMismatchError(
        "mot metrics: prediction and ground truth have different frame counts");
  }
  MotReport report;
  double distance_sum = 0.0;
  double iou_sum = 0.0;
  std::unordered_map<int, int> last_match;  // gt id -> pred id
  for (size_t f = 0; f < gt.size(); ++f) {
    if (pred[f].frame_id != gt[f].frame_id) {
      std::ostringstream msg;
      msg << "mot metrics: misaligned frames (" << pred[f].frame_id << " vs "
          << gt[f].frame_id << ")";
      throw DimensionMismatchError(msg.str());
    }
    CheckUniqueIds(gt[f], "ground-truth");
    CheckUniqueIds(pred[f], "predicted");
    const auto& g = gt[f].points;
    const auto& p = pred[f].points;
    const std::vector<FrameMatch> matches = MatchFrame(g, p, tp_threshold_m);
    for (const FrameMatch& m : matches) {
      const int gt_id = g[m.gt_index].id;
      const int pred_id = p[m.pred_index].id;
      const auto it = last_match.find(gt_id);
      if (it != last_match.end() && it->second != pred_id) ++report.ids;
      last_match[gt_id] = pred_id;
      distance_sum += m.distance;
      iou_sum += Iou3d(g[m.gt_index], p[m.pred_index]);
    }
    const int n_matches = static_cast<int>(matches.size());
    report.tp += n_matches;
    report.fn += static_cast<int>(g.size()) - n_matches;
    report.fp += static_cast<int>(p.size()) - n_matches;
    report.num_gt += static_cast<int>(g.size());
  }
  if (report.num_gt == 0) {
    throw InsufficientDataError("mot metrics: no ground-truth objects");
  }
  report.mota = 1.0 - static_cast<double>(report.fn + report.fp + report.ids) /
                          report.num_gt;
  if (report.tp > 0) {
    report.motp_m = distance_sum / report.tp;
    report.motp_iou3d = iou_sum / report.tp;
  }
  if (report.tp + report.fp > 0) {
    report.precision =
        static_cast<double>(report.tp) / (report.tp + report.fp);
  }
  return report;
}

nlohmann::json ToJson(const DepthReport& report) {
  return {{"rms", report.rms},
          {"rel", report.rel},
          {"mae", report.mae},
          {"me", report.me},
          {"n_valid", report.n_valid}};
}

nlohmann::json ToJson(const MotReport& report) {
  return {{"mota", report.mota},         {"motp_m", report.motp_m},
          {"motp_iou3d", report.motp_iou3d}, {"precision", report.precision},
          {"tp", report.tp},             {"fp", report.fp},
          {"fn", report.fn},             {"ids", report.ids},
          {"num_gt", report.num_gt}};
}

nlohmann::json ToJson(const QuartileSummary& summary) {
  return {{"min", summary.min},       {"q1", summary.q1},
          {"median", summary.median}, {"q3", summary.q3},
          {"max", summary.max},       {"n", summary.n}};
}

}  // namespace camdist
