#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "camdist/depth_params.h"
#include "camdist/raster.h"

namespace camdist {

struct RansacConfig {
  int iterations = 500;
  // Consensus threshold on absolute residuals. When unset it is derived as
  // 1.5 x the median absolute residual of a least-squares fit over all points.
  std::optional<double> inlier_threshold;
  int min_samples = 2;
  uint64_t seed = 0;
  // Larger inputs are subsampled (seeded, without replacement) to this size.
  size_t max_points = 100000;

  void Validate() const;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  size_t num_inliers = 0;
  // Threshold used for the final inlier set.
  double inlier_threshold = 0.0;
};

// Ordinary least squares y = slope * x + intercept. Throws
// InsufficientDataError for fewer than two points or constant x.
LineFit FitLineLeastSquares(std::span<const double> x,
                            std::span<const double> y);

// RANSAC over minimal least-squares fits on min_samples points, followed by
// a least-squares refit on the consensus set. The refit is iterated with a
// threshold shrunk to 2.5 robust standard deviations (1.4826 x median absolute
// residual over all points) of the current model, never exceeding the
// consensus threshold, until the inlier set is stable.
LineFit FitLineRansac(std::span<const double> x, std::span<const double> y,
                      const RansacConfig& config);

// Fits inverse ground truth: 1/g ~ scale * disparity + shift over pixels valid
// in both rasters.
AffineDepthParams RansacAlignDisparity(const DisparityMap& disparity,
                                       const DepthMap& ground_truth,
                                       const RansacConfig& config);

// depth = 1 / (disparity * scale + shift) for a disparity-space fit.
DepthMap MetricDepthFromDisparityFit(const DisparityMap& disparity,
                                     const AffineDepthParams& params);

struct CalibrationFrame {
  const DisparityMap* disparity = nullptr;
  const DepthMap* ground_truth = nullptr;
};

// Mean of per-frame disparity-space fits.
GlobalCalibration FitGlobalCalibration(std::span<const CalibrationFrame> frames,
                                       const RansacConfig& config);
// Mean of already computed disparity-space fits.
GlobalCalibration AverageDisparityFits(
    std::span<const AffineDepthParams> fits);

// Robust fit g ~ scale * approx + shift in depth space.
AffineDepthParams DepthAlign(const DepthMap& approx,
                             const DepthMap& ground_truth,
                             const RansacConfig& config);

struct LossConfig {
  double alpha = 0.04;  // 1/m
};

// Mean over jointly valid pixels of (d_m - g)^2 * exp(-alpha * g).
double WeightedLoss(const DepthMap& metric, const DepthMap& ground_truth,
                    const LossConfig& config);

// (approximate depth, optional ground truth) -> depth-space parameters.
class Aligner {
 public:
  virtual ~Aligner() = default;
  virtual AffineDepthParams Align(const DepthMap& approx,
                                  const DepthMap* ground_truth) const = 0;
  virtual std::string Name() const = 0;
};

// Fits against ground truth with DepthAlign.
class RansacAligner : public Aligner {
 public:
  explicit RansacAligner(RansacConfig config) : config_(config) {}
  AffineDepthParams Align(const DepthMap& approx,
                          const DepthMap* ground_truth) const override;
  std::string Name() const override { return "ransac-depth"; }

 private:
  RansacConfig config_;
};

// Returns externally supplied parameters, e.g. from a learned aligner.
class FixedParamsAligner : public Aligner {
 public:
  explicit FixedParamsAligner(AffineDepthParams params);
  AffineDepthParams Align(const DepthMap& approx,
                          const DepthMap* ground_truth) const override;
  std::string Name() const override { return "fixed"; }

 private:
  AffineDepthParams params_;
};

}  // namespace camdist
