#include "camdist/alignment.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "camdist/depth_conversion.h"
#include "camdist/error.h"
#include "camdist/rng.h"

namespace camdist {
namespace {

constexpr int kMaxRefinementRounds = 20;
constexpr double kAutoThresholdFactor = 1.5;
// 2.5 sigma with sigma = 1.4826 * MAD.
constexpr double kRefinementSigmas = 2.5;
constexpr double kMadToSigma = 1.4826;

double MedianInPlace(std::vector<double>& values) {
  const size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

// Least squares on the selected indices; false when x is constant on them.
bool FitSubset(std::span<const double> x, std::span<const double> y,
               std::span<const size_t> indices, double* slope,
               double* intercept) {
  const size_t n = indices.size();
  if (n < 2) return false;
  double mean_x = 0.0, mean_y = 0.0;
  double min_x = x[indices[0]], max_x = x[indices[0]];
  for (size_t i : indices) {
    mean_x += x[i];
    mean_y += y[i];
    min_x = std::min(min_x, x[i]);
    max_x = std::max(max_x, x[i]);
  }
  if (!(max_x > min_x)) return false;
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i : indices) {
    const double dx = x[i] - mean_x;
    sxx += dx * dx;
    sxy += dx * (y[i] - mean_y);
  }
  if (!(sxx > 0.0)) return false;
  *slope = sxy / sxx;
  *intercept = mean_y - *slope * mean_x;
  return std::isfinite(*slope) && std::isfinite(*intercept);
}

std::vector<size_t> InlierIndices(std::span<const double> x,
                                  std::span<const double> y, double slope,
                                  double intercept, double threshold) {
  std::vector<size_t> inliers;
  for (size_t i = 0; i < x.size(); ++i) {
    if (std::abs(slope * x[i] + intercept - y[i]) <= threshold) {
      inliers.push_back(i);
    }
  }
  return inliers;
}

double MedianAbsResidual(std::span<const double> x, std::span<const double> y,
                         double slope, double intercept) {
  std::vector<double> residuals(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    residuals[i] = std::abs(slope * x[i] + intercept - y[i]);
  }
  return MedianInPlace(residuals);
}

struct PairedSamples {
  std::vector<double> x;
  std::vector<double> y;
};

// Uniform subsample without replacement, original order preserved.
void Subsample(PairedSamples& samples, size_t max_points, uint64_t seed) {
  const size_t n = samples.x.size();
  if (n <= max_points) return;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(DeriveSeed(seed, 0x5ab5));
  for (size_t i = 0; i < max_points; ++i) {
    const size_t j = i + rng.UniformInt(n - i);
    std::swap(order[i], order[j]);
  }
  order.resize(max_points);
  std::sort(order.begin(), order.end());
  PairedSamples kept;
  kept.x.reserve(max_points);
  kept.y.reserve(max_points);
  for (size_t i : order) {
    kept.x.push_back(samples.x[i]);
    kept.y.push_back(samples.y[i]);
  }
  samples = std::move(kept);
}

void CheckSameSize(const MaskedRaster& a, const MaskedRaster& b,
                   const char* what) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << what << ": rasters differ in size (" << a.width() << "x"
        << a.height() << " vs " << b.width() << "x" << b.height() << ")";
    throw DimensionMismatchError(msg.str());
  }
}

void CheckOverlap(size_t count, const RansacConfig& config, const char* what) {
  if (count < static_cast<size_t>(std::max(config.min_samples, 2))) {
    std::ostringstream msg;
    msg << what << ": only " << count
        << " jointly valid pixels, need at least " << config.min_samples;
    throw InsufficientDataError(msg.str());
  }
}

}  // namespace

void RansacConfig::Validate() const {
  if (iterations < 1) {
    throw InvalidArgumentError("ransac: iterations must be >= 1");
  }
  if (inlier_threshold && !(*inlier_threshold > 0.0)) {
    throw InvalidArgumentError("ransac: inlier_threshold must be positive");
  }
  if (min_samples < 2) {
    throw InvalidArgumentError("ransac: min_samples must be >= 2");
  }
  if (max_points < static_cast<size_t>(min_samples)) {
    throw InvalidArgumentError("ransac: max_points must be >= min_samples");
  }
}

LineFit FitLineLeastSquares(std::span<const double> x,
                            std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionMismatchError("FitLineLeastSquares: x and y differ in size");
  }
  std::vector<size_t> all(x.size());
  std::iota(all.begin(), all.end(), size_t{0});
  LineFit fit;
  if (!FitSubset(x, y, all, &fit.slope, &fit.intercept)) {
    throw InsufficientDataError(
        "least-squares line fit is rank deficient (fewer than two distinct x)");
  }
  fit.num_inliers = x.size();
  return fit;
}

LineFit FitLineRansac(std::span<const double> x, std::span<const double> y,
                      const RansacConfig& config) {
  config.Validate();
  // Throws on rank deficiency, so constant inputs never reach sampling.
  const LineFit initial = FitLineLeastSquares(x, y);
  const size_t n = x.size();

  std::vector<double> abs_y(n);
  for (size_t i = 0; i < n; ++i) abs_y[i] = std::abs(y[i]);
  const double floor_threshold =
      1e-9 * std::max(MedianInPlace(abs_y), 1e-300);

  double threshold;
  if (config.inlier_threshold) {
    threshold = *config.inlier_threshold;
  } else {
    threshold = std::max(
        kAutoThresholdFactor *
            MedianAbsResidual(x, y, initial.slope, initial.intercept),
        floor_threshold);
  }

  Rng rng(config.seed);
  const size_t sample_size =
      std::min(static_cast<size_t>(config.min_samples), n);
  std::vector<size_t> sample(sample_size);
  size_t best_count = 0;
  double best_residual_sum = 0.0;
  double best_slope = initial.slope, best_intercept = initial.intercept;
  bool have_best = false;

  for (int iter = 0; iter < config.iterations; ++iter) {
    // Distinct indices by rejection; sample_size is tiny relative to n.
    for (size_t k = 0; k < sample_size; ++k) {
      size_t candidate;
      bool duplicate;
      do {
        candidate = rng.UniformInt(n);
        duplicate = std::find(sample.begin(), sample.begin() + k, candidate) !=
                    sample.begin() + k;
      } while (duplicate);
      sample[k] = candidate;
    }
    double slope, intercept;
    if (!FitSubset(x, y, sample, &slope, &intercept)) continue;
    size_t count = 0;
    double residual_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double r = std::abs(slope * x[i] + intercept - y[i]);
      if (r <= threshold) {
        ++count;
        residual_sum += r;
      }
    }
    if (!have_best || count > best_count ||
        (count == best_count && residual_sum < best_residual_sum)) {
      have_best = true;
      best_count = count;
      best_residual_sum = residual_sum;
      best_slope = slope;
      best_intercept = intercept;
    }
  }

  LineFit fit;
  fit.slope = best_slope;
  fit.intercept = best_intercept;
  fit.inlier_threshold = threshold;
  std::vector<size_t> inliers =
      InlierIndices(x, y, fit.slope, fit.intercept, threshold);
  double slope, intercept;
  if (!FitSubset(x, y, inliers, &slope, &intercept)) {
    // Consensus collapsed onto a single x; keep the full-data fit.
    LineFit fallback = initial;
    fallback.inlier_threshold = threshold;
    return fallback;
  }
  fit.slope = slope;
  fit.intercept = intercept;
  fit.num_inliers = inliers.size();

  for (int round = 0; round < kMaxRefinementRounds; ++round) {
    const double robust_scale =
        kMadToSigma * MedianAbsResidual(x, y, fit.slope, fit.intercept);
    const double refined_threshold = std::min(
        threshold, std::max(kRefinementSigmas * robust_scale, floor_threshold));
    std::vector<size_t> refined =
        InlierIndices(x, y, fit.slope, fit.intercept, refined_threshold);
    if (!FitSubset(x, y, refined, &slope, &intercept)) break;
    const bool stable = refined == inliers;
    fit.slope = slope;
    fit.intercept = intercept;
    fit.num_inliers = refined.size();
    fit.inlier_threshold = refined_threshold;
    inliers = std::move(refined);
    if (stable) break;
  }
  return fit;
}

AffineDepthParams RansacAlignDisparity(const DisparityMap& disparity,
                                       const DepthMap& ground_truth,
                                       const RansacConfig& config) {
  config.Validate();
  CheckSameSize(disparity, ground_truth, "RansacAlignDisparity");
  PairedSamples samples;
  for (int v = 0; v < disparity.height(); ++v) {
    for (int u = 0; u < disparity.width(); ++u) {
      if (!disparity.IsValid(u, v) || !ground_truth.IsValid(u, v)) continue;
      samples.x.push_back(disparity.Value(u, v));
      samples.y.push_back(1.0 / ground_truth.Value(u, v));
    }
  }
  CheckOverlap(samples.x.size(), config, "RansacAlignDisparity");
  Subsample(samples, config.max_points, config.seed);
  const LineFit fit = FitLineRansac(samples.x, samples.y, config);
  return {fit.slope, fit.intercept, ParamSpace::kDisparity};
}

DepthMap MetricDepthFromDisparityFit(const DisparityMap& disparity,
                                     const AffineDepthParams& params) {
  if (params.space != ParamSpace::kDisparity) {
    throw InvalidArgumentError(
        "MetricDepthFromDisparityFit: parameters are not in disparity space");
  }
  GlobalCalibration as_calibration{params.scale, params.shift, 1};
  DepthMap depth = DisparityToApproxDepth(disparity, as_calibration);
  depth.kind = DepthKind::kMetric;
  return depth;
}

GlobalCalibration AverageDisparityFits(
    std::span<const AffineDepthParams> fits) {
  if (fits.empty()) {
    throw InsufficientDataError("global calibration needs at least one frame");
  }
  GlobalCalibration calibration{0.0, 0.0, static_cast<int>(fits.size())};
  for (const AffineDepthParams& fit : fits) {
    if (fit.space != ParamSpace::kDisparity) {
      throw InvalidArgumentError(
          "global calibration averages disparity-space fits only");
    }
    calibration.scale += fit.scale;
    calibration.shift += fit.shift;
  }
  calibration.scale /= static_cast<double>(fits.size());
  calibration.shift /= static_cast<double>(fits.size());
  return calibration;
}

GlobalCalibration FitGlobalCalibration(std::span<const CalibrationFrame> frames,
                                       const RansacConfig& config) {
  if (frames.empty()) {
    throw InsufficientDataError("global calibration needs at least one frame");
  }
  std::vector<AffineDepthParams> fits;
  fits.reserve(frames.size());
  for (const CalibrationFrame& frame : frames) {
    if (!frame.disparity || !frame.ground_truth) {
      throw InvalidArgumentError("calibration frame is missing a raster");
    }
    fits.push_back(
        RansacAlignDisparity(*frame.disparity, *frame.ground_truth, config));
  }
  return AverageDisparityFits(fits);
}

AffineDepthParams DepthAlign(const DepthMap& approx,
                             const DepthMap& ground_truth,
                             const RansacConfig& config) {
  config.Validate();
  CheckSameSize(approx, ground_truth, "DepthAlign");
  PairedSamples samples;
  for (int v = 0; v < approx.height(); ++v) {
    for (int u = 0; u < approx.width(); ++u) {
      if (!approx.IsValid(u, v) || !ground_truth.IsValid(u, v)) continue;
      samples.x.push_back(approx.Value(u, v));
      samples.y.push_back(ground_truth.Value(u, v));
    }
  }
  CheckOverlap(samples.x.size(), config, "DepthAlign");
  Subsample(samples, config.max_points, config.seed);
  const LineFit fit = FitLineRansac(samples.x, samples.y, config);
  return {fit.slope, fit.intercept, ParamSpace::kDepth};
}

double WeightedLoss(const DepthMap& metric, const DepthMap& ground_truth,
                    const LossConfig& config) {
  if (!(config.alpha >= 0.0)) {
    throw InvalidArgumentError("loss: alpha must be >= 0");
  }
  CheckSameSize(metric, ground_truth, "WeightedLoss");
  double sum = 0.0;
  size_t n_valid = 0;
  for (int v = 0; v < metric.height(); ++v) {
    for (int u = 0; u < metric.width(); ++u) {
      if (!metric.IsValid(u, v) || !ground_truth.IsValid(u, v)) continue;
      const double g = ground_truth.Value(u, v);
      const double e = metric.Value(u, v) - g;
      sum += e * e * std::exp(-config.alpha * g);
      ++n_valid;
    }
  }
  if (n_valid == 0) {
    throw InsufficientDataError("WeightedLoss: no jointly valid pixels");
  }
  return sum / static_cast<double>(n_valid);
}

AffineDepthParams RansacAligner::Align(const DepthMap& approx,
                                       const DepthMap* ground_truth) const {
  if (!ground_truth) {
    throw InvalidArgumentError("RANSAC aligner requires ground truth depth");
  }
  return DepthAlign(approx, *ground_truth, config_);
}

FixedParamsAligner::FixedParamsAligner(AffineDepthParams params)
    : params_(params) {
  if (params_.space != ParamSpace::kDepth) {
    throw InvalidArgumentError("fixed aligner takes depth-space parameters");
  }
}

AffineDepthParams FixedParamsAligner::Align(const DepthMap&,
                                            const DepthMap*) const {
  return params_;
}

}  // namespace camdist
