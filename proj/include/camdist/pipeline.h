#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "camdist/alignment.h"
#include "camdist/depth_params.h"
#include "camdist/formats.h"
#include "camdist/instances.h"
#include "camdist/raster.h"
#include "camdist/tracking.h"

namespace camdist {

enum class AlignerKind {
  kRansac,       // per-frame disparity fit against ground truth
  kRansacDepth,  // global calibration, then per-frame depth fit against GT
  kFixed,        // global calibration, then fixed depth-space parameters
  kGlobal,       // global calibration only
};

const char* AlignerKindName(AlignerKind kind);
AlignerKind AlignerKindFromName(const std::string& name);

struct AlignerChoice {
  AlignerKind kind = AlignerKind::kRansac;
  RansacConfig ransac;
  GlobalCalibration calibration;
  AffineDepthParams fixed;

  bool NeedsGroundTruth() const {
    return kind == AlignerKind::kRansac || kind == AlignerKind::kRansacDepth;
  }
};

struct FrameAlignment {
  DepthMap metric;
  // The fitted or applied second-stage parameters; none for kGlobal.
  std::optional<AffineDepthParams> params;
};

FrameAlignment AlignFrame(const DisparityMap& disparity,
                          const DepthMap* ground_truth,
                          const AlignerChoice& choice);

// Attention map for a detection, or nullopt when none exists.
using AttentionLookup =
    std::function<std::optional<AttentionMap>(const Detection&)>;

struct FrameDistanceResult {
  std::vector<DistanceRecord> rows;
  // Detections whose box held no valid depth.
  std::vector<std::string> errors;
};

// Without an attention map the whole box is used and the row is flagged as
// a fallback.
FrameDistanceResult ComputeFrameDistances(const DepthMap& metric,
                                          const ImageDetections& frame,
                                          const AttentionLookup& attention,
                                          ImageSize image);

Box DetectionBoxPixels(const Detection& detection, ImageSize image);

// Joins distance rows with their detections by (frame_id, det_index) and
// runs the tracker over frames in order.
std::vector<TrackOutput> TrackSequence(
    const std::vector<ImageDetections>& frames,
    const std::vector<DistanceRecord>& distances, ImageSize image,
    const AssociationConfig& config);

struct PipelineInput {
  std::vector<std::string> stems;
  std::vector<DisparityMap> disparity;
  // Empty, or one per frame.
  std::vector<DepthMap> ground_truth;
  std::vector<ImageDetections> detections;
  AttentionLookup attention;
  ImageSize image;
};

struct PipelineOptions {
  AlignerChoice aligner;
  AssociationConfig association;
  DetectionIngestOptions ingest;
  // Round metric depth to whole millimeters between stages, reproducing a
  // run that stores depth in PNG16 files.
  bool quantize_depth_mm = false;
};

struct PipelineResult {
  std::vector<DepthMap> metric;
  std::vector<std::optional<AffineDepthParams>> params;
  std::vector<DistanceRecord> distances;
  std::vector<TrackOutput> tracks;
};

// Alignment, instance distances and tracking in one call. Throws on the first
// failing frame.
PipelineResult RunPipeline(const PipelineInput& input,
                           const PipelineOptions& options);

}  // namespace camdist
