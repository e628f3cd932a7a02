#include "camdist/pipeline.h"

#include <map>
#include <sstream>
#include <utility>

#include "camdist/depth_conversion.h"
#include "camdist/error.h"
#include "camdist/image_io.h"

namespace camdist {

const char* AlignerKindName(AlignerKind kind) {
  switch (kind) {
    case AlignerKind::kRansac:
      return "ransac";
    case AlignerKind::kRansacDepth:
      return "ransac-depth";
    case AlignerKind::kFixed:
      return "fixed";
    case AlignerKind::kGlobal:
      return "global";
  }
  return "unknown";
}

AlignerKind AlignerKindFromName(const std::string& name) {
  for (AlignerKind kind : {AlignerKind::kRansac, AlignerKind::kRansacDepth,
                           AlignerKind::kFixed, AlignerKind::kGlobal}) {
    if (name == AlignerKindName(kind)) return kind;
  }
  throw InvalidArgumentError("unknown aligner '" + name +
                             "' (expected ransac, ransac-depth, fixed, global)");
}

FrameAlignment AlignFrame(const DisparityMap& disparity,
                          const DepthMap* ground_truth,
                          const AlignerChoice& choice) {
  if (choice.NeedsGroundTruth() && ground_truth == nullptr) {
    throw InvalidArgumentError(std::string("aligner '") +
                               AlignerKindName(choice.kind) +
                               "' needs ground-truth depth");
  }
  FrameAlignment result;
  if (choice.kind == AlignerKind::kRansac) {
    const AffineDepthParams params =
        RansacAlignDisparity(disparity, *ground_truth, choice.ransac);
    result.metric = MetricDepthFromDisparityFit(disparity, params);
    result.params = params;
    return result;
  }

  DepthMap approx = DisparityToApproxDepth(disparity, choice.calibration);
  if (choice.kind == AlignerKind::kGlobal) {
    approx.kind = DepthKind::kMetric;
    result.metric = std::move(approx);
    return result;
  }
  std::unique_ptr<Aligner> aligner;
  if (choice.kind == AlignerKind::kRansacDepth) {
    aligner = std::make_unique<RansacAligner>(choice.ransac);
  } else {
    aligner = std::make_unique<FixedParamsAligner>(choice.fixed);
  }
  const AffineDepthParams params = aligner->Align(approx, ground_truth);
  result.metric = ApplyAffineDepth(approx, params);
  result.params = params;
  return result;
}

FrameDistanceResult ComputeFrameDistances(const DepthMap& metric,
                                          const ImageDetections& frame,
                                          const AttentionLookup& attention,
                                          ImageSize image) {
  if (metric.size() != image) {
    throw DimensionMismatchError("distances: depth raster size differs from "
                                 "the camera resolution");
  }
  FrameDistanceResult result;
  for (const Detection& det : frame.detections) {
    std::optional<AttentionMap> map;
    if (attention) map = attention(det);
    const InstanceMask mask = map ? ThresholdAttention(*map, det, image)
                                  : BboxMask(det, image);
    try {
      const InstanceDistance d = ComputeInstanceDistance(mask, metric);
      DistanceRecord row;
      row.frame_id = det.frame_id;
      row.det_index = det.det_index;
      row.category = det.category;
      row.conf = det.confidence;
      row.distance_m = d.distance_m;
      row.n_pixels = d.n_pixels;
      row.fallback = !map || d.fallback_used;
      result.rows.push_back(std::move(row));
    } catch (const InsufficientDataError& e) {
      std::ostringstream msg;
      msg << frame.stem << " detection " << det.det_index << ": " << e.what();
      result.errors.push_back(msg.str());
    }
  }
  return result;
}

Box DetectionBoxPixels(const Detection& detection, ImageSize image) {
  return {detection.bbox.x * image.width, detection.bbox.y * image.height,
          detection.bbox.w * image.width, detection.bbox.h * image.height};
}

std::vector<TrackOutput> TrackSequence(
    const std::vector<ImageDetections>& frames,
    const std::vector<DistanceRecord>& distances, ImageSize image,
    const AssociationConfig& config) {
  std::map<std::pair<int, int>, const Detection*> detections;
  for (const ImageDetections& frame : frames) {
    for (const Detection& det : frame.detections) {
      detections[{det.frame_id, det.det_index}] = &det;
    }
  }
  std::map<int, std::vector<Observation3D>> by_frame;
  for (const DistanceRecord& row : distances) {
    const auto it = detections.find({row.frame_id, row.det_index});
    if (it == detections.end()) {
      std::ostringstream msg;
      msg << "tracking: distance row (frame " << row.frame_id << ", det "
          << row.det_index << ") has no matching detection";
      throw InvalidArgumentError(msg.str());
    }
    by_frame[row.frame_id].push_back({DetectionBoxPixels(*it->second, image),
                                      row.distance_m, row.frame_id,
                                      row.det_index});
  }
  Sort25dTracker tracker(config);
  std::vector<TrackOutput> out;
  for (const ImageDetections& frame : frames) {
    const auto it = by_frame.find(frame.frame_id);
    std::span<const Observation3D> observations;
    if (it != by_frame.end()) observations = it->second;
    std::vector<TrackOutput> step = tracker.Step(frame.frame_id, observations);
    out.insert(out.end(), step.begin(), step.end());
  }
  return out;
}

PipelineResult RunPipeline(const PipelineInput& input,
                           const PipelineOptions& options) {
  const size_t n = input.stems.size();
  if (input.disparity.size() != n || input.detections.size() != n) {
    throw DimensionMismatchError(
        "pipeline: disparity and detections must hold one entry per frame");
  }
  if (!input.ground_truth.empty() && input.ground_truth.size() != n) {
    throw DimensionMismatchError(
        "pipeline: ground truth must be empty or one per frame");
  }
  PipelineResult result;
  for (size_t i = 0; i < n; ++i) {
    if (input.detections[i].stem != input.stems[i]) {
      throw InvalidArgumentError("pipeline: detections for '" +
                                 input.detections[i].stem +
                                 "' do not line up with frame '" +
                                 input.stems[i] + "'");
    }
    const DepthMap* gt =
        input.ground_truth.empty() ? nullptr : &input.ground_truth[i];
    FrameAlignment aligned = AlignFrame(input.disparity[i], gt, options.aligner);
    if (options.quantize_depth_mm) {
      aligned.metric = QuantizeToMillimeters(aligned.metric);
    }
    FrameDistanceResult distances = ComputeFrameDistances(
        aligned.metric, input.detections[i], input.attention, input.image);
    if (!distances.errors.empty()) throw InsufficientDataError(distances.errors[0]);
    result.distances.insert(result.distances.end(), distances.rows.begin(),
                            distances.rows.end());
    result.metric.push_back(std::move(aligned.metric));
    result.params.push_back(aligned.params);
  }
  result.tracks = TrackSequence(input.detections, result.distances,
                                input.image, options.association);
  return result;
}

}  // namespace camdist
