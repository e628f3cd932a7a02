#include "camdist/tracking.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "camdist/assignment.h"
#include "camdist/error.h"

namespace camdist {
namespace {

// Noise magnitudes of the original SORT filter for the box terms.
constexpr double kInitPositionVar = 10.0;
constexpr double kInitVelocityVar = 10000.0;
constexpr double kProcessPositionVar = 1.0;
constexpr double kProcessVelocityVar = 0.01;
constexpr double kProcessAreaVelocityVar = 0.0001;
constexpr double kMeasureCenterVar = 1.0;
constexpr double kMeasureShapeVar = 10.0;
// Depth terms, meters.
constexpr double kInitDepthVelocityVar = 1.0;
constexpr double kProcessDepthVar = 0.01;
constexpr double kProcessDepthVelocityVar = 0.001;

struct Layout {
  bool depth;
  int measured() const { return depth ? 5 : 4; }
  int dim() const { return depth ? 9 : 7; }
  int du() const { return measured(); }
  int dv() const { return measured() + 1; }
  int ds() const { return measured() + 2; }
  int dz() const { return measured() + 3; }
};

Eigen::VectorXd Measurement(const Box& box, double z, const Layout& layout) {
  Eigen::VectorXd m(layout.measured());
  m(0) = box.center_u();
  m(1) = box.center_v();
  m(2) = box.w * box.h;
  m(3) = box.w / box.h;
  if (layout.depth) m(4) = z;
  return m;
}

Eigen::MatrixXd Transition(const Layout& layout) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(layout.dim(), layout.dim());
  f(0, layout.du()) = 1.0;
  f(1, layout.dv()) = 1.0;
  f(2, layout.ds()) = 1.0;
  if (layout.depth) f(4, layout.dz()) = 1.0;
  return f;
}

Eigen::MatrixXd ProcessNoise(const Layout& layout) {
  Eigen::VectorXd q(layout.dim());
  q.head(4).setConstant(kProcessPositionVar);
  if (layout.depth) q(4) = kProcessDepthVar;
  q(layout.du()) = kProcessVelocityVar;
  q(layout.dv()) = kProcessVelocityVar;
  q(layout.ds()) = kProcessAreaVelocityVar;
  if (layout.depth) q(layout.dz()) = kProcessDepthVelocityVar;
  return q.asDiagonal();
}

Eigen::MatrixXd MeasurementNoise(const Layout& layout, double depth_std) {
  Eigen::VectorXd r(layout.measured());
  r << kMeasureCenterVar, kMeasureCenterVar, kMeasureShapeVar, kMeasureShapeVar;
  if (layout.depth) {
    r.conservativeResize(5);
    r(4) = depth_std * depth_std;
  }
  return r.asDiagonal();
}

}  // namespace

double Iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) -
                                      std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) -
                                      std::max(a.y, b.y));
  const double intersection = ix * iy;
  const double union_area = a.area() + b.area() - intersection;
  if (!(union_area > 0.0)) return 0.0;
  return std::clamp(intersection / union_area, 0.0, 1.0);
}

double DistZ(double z_track, double z_detection, double dist_max) {
  if (!(dist_max > 0.0)) {
    throw InvalidArgumentError("DistZ: dist_max must be positive");
  }
  return std::clamp((dist_max - std::abs(z_track - z_detection)) / dist_max,
                    0.0, 1.0);
}

double SimScore(double iou, double dist_z, double alpha) {
  return alpha * iou + (1.0 - alpha) * dist_z;
}

void AssociationConfig::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidArgumentError("association: alpha must lie in [0, 1]");
  }
  if (!(dist_max > 0.0)) {
    throw InvalidArgumentError("association: dist_max must be positive");
  }
  if (max_age < 0 || min_hits < 0) {
    throw InvalidArgumentError("association: max_age and min_hits must be >= 0");
  }
  if (!(depth_measurement_std > 0.0)) {
    throw InvalidArgumentError(
        "association: depth_measurement_std must be positive");
  }
}

Box TrackState::bbox() const {
  const double s = mean(2);
  const double r = mean(3);
  const double w = std::sqrt(s * r);
  const double h = s / w;
  return {mean(0) - 0.5 * w, mean(1) - 0.5 * h, w, h};
}

Sort25dTracker::Sort25dTracker(AssociationConfig config) : config_(config) {
  config_.Validate();
}

TrackState Sort25dTracker::NewTrack(const Observation3D& observation) {
  const Layout layout{config_.use_depth};
  TrackState track;
  track.track_id = next_id_++;
  track.mean = Eigen::VectorXd::Zero(layout.dim());
  track.mean.head(layout.measured()) =
      Measurement(observation.bbox, observation.z, layout);
  Eigen::VectorXd p(layout.dim());
  p.head(4).setConstant(kInitPositionVar);
  if (layout.depth) {
    p(4) = config_.depth_measurement_std * config_.depth_measurement_std;
  }
  p(layout.du()) = kInitVelocityVar;
  p(layout.dv()) = kInitVelocityVar;
  p(layout.ds()) = kInitVelocityVar;
  if (layout.depth) p(layout.dz()) = kInitDepthVelocityVar;
  track.cov = p.asDiagonal();
  track.hits = 1;
  track.hit_streak = 1;
  track.last_z = observation.z;
  return track;
}

void Sort25dTracker::Predict(TrackState& track) const {
  const Layout layout{config_.use_depth};
  // Keep the predicted area from going negative.
  if (track.mean(layout.ds()) + track.mean(2) <= 0.0) {
    track.mean(layout.ds()) = 0.0;
  }
  const Eigen::MatrixXd f = Transition(layout);
  track.mean = f * track.mean;
  track.cov = f * track.cov * f.transpose() + ProcessNoise(layout);
  if (layout.depth) {
    track.mean(4) = std::max(track.mean(4), kMinPredictedDepth);
  }
  ++track.age;
  if (track.time_since_update > 0) track.hit_streak = 0;
  ++track.time_since_update;
}

void Sort25dTracker::Update(TrackState& track,
                            const Observation3D& observation) const {
  const Layout layout{config_.use_depth};
  const int m = layout.measured();
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, layout.dim());
  const Eigen::MatrixXd r =
      MeasurementNoise(layout, config_.depth_measurement_std);
  const Eigen::VectorXd innovation =
      Measurement(observation.bbox, observation.z, layout) - h * track.mean;
  const Eigen::MatrixXd s = h * track.cov * h.transpose() + r;
  const Eigen::MatrixXd gain =
      track.cov * h.transpose() * s.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
  track.mean += gain * innovation;
  // Joseph form keeps the covariance symmetric positive definite.
  const Eigen::MatrixXd i_kh =
      Eigen::MatrixXd::Identity(layout.dim(), layout.dim()) - gain * h;
  track.cov = i_kh * track.cov * i_kh.transpose() + gain * r * gain.transpose();
  if (layout.depth) {
    track.mean(4) = std::max(track.mean(4), kMinPredictedDepth);
  }
  track.time_since_update = 0;
  ++track.hits;
  ++track.hit_streak;
  track.last_z = observation.z;
}

double Sort25dTracker::TrackDepth(const TrackState& track) const {
  if (config_.use_depth) return std::max(track.mean(4), kMinPredictedDepth);
  return track.last_z;
}

std::vector<TrackOutput> Sort25dTracker::Step(
    int frame_id, std::span<const Observation3D> observations) {
  if (has_frame_ && frame_id <= last_frame_id_) {
    std::ostringstream msg;
    msg << "tracker: frame " << frame_id << " arrived after frame "
        << last_frame_id_;
    throw OrderError(msg.str());
  }
  for (const Observation3D& obs : observations) {
    if (obs.frame_id != frame_id) {
      throw InvalidArgumentError(
          "tracker: observation belongs to a different frame");
    }
    if (!(obs.z > 0.0) || !(obs.bbox.w > 0.0) || !(obs.bbox.h > 0.0)) {
      throw InvalidArgumentError(
          "tracker: observations need positive depth and box extent");
    }
  }
  has_frame_ = true;
  last_frame_id_ = frame_id;

  std::vector<TrackState> alive;
  alive.reserve(tracks_.size());
  for (TrackState& track : tracks_) {
    Predict(track);
    const Box box = track.bbox();
    if (std::isfinite(box.x) && std::isfinite(box.y) && box.w > 0.0 &&
        box.h > 0.0 && std::isfinite(box.w) && std::isfinite(box.h)) {
      alive.push_back(std::move(track));
    }
  }
  tracks_ = std::move(alive);

  const int n_tracks = static_cast<int>(tracks_.size());
  const int n_obs = static_cast<int>(observations.size());
  std::vector<int> obs_match(n_obs, -1);
  if (n_tracks > 0 && n_obs > 0) {
    Eigen::MatrixXd score(n_tracks, n_obs);
    for (int t = 0; t < n_tracks; ++t) {
      const Box predicted = tracks_[t].bbox();
      const double z_track = TrackDepth(tracks_[t]);
      for (int d = 0; d < n_obs; ++d) {
        score(t, d) = SimScore(Iou(predicted, observations[d].bbox),
                               DistZ(z_track, observations[d].z,
                                     config_.dist_max),
                               config_.alpha);
      }
    }
    const std::vector<int> assignment = SolveMinCostAssignment(-score);
    for (int t = 0; t < n_tracks; ++t) {
      const int d = assignment[t];
      if (d < 0 || score(t, d) < config_.sim_threshold) continue;
      obs_match[d] = t;
    }
  }

  std::vector<int> matched_det(n_tracks, -1);
  for (int d = 0; d < n_obs; ++d) {
    if (obs_match[d] >= 0) {
      Update(tracks_[obs_match[d]], observations[d]);
      matched_det[obs_match[d]] = observations[d].det_index;
    }
  }
  for (int d = 0; d < n_obs; ++d) {
    if (obs_match[d] < 0) {
      tracks_.push_back(NewTrack(observations[d]));
      matched_det.push_back(observations[d].det_index);
    }
  }

  std::vector<TrackOutput> outputs;
  std::vector<TrackState> kept;
  kept.reserve(tracks_.size());
  for (size_t i = 0; i < tracks_.size(); ++i) {
    TrackState& track = tracks_[i];
    if (track.time_since_update > config_.max_age) continue;
    if (track.hits >= config_.min_hits) {
      TrackOutput out;
      out.frame_id = frame_id;
      out.track_id = track.track_id;
      out.bbox = track.bbox();
      out.z = TrackDepth(track);
      out.matched = track.time_since_update == 0;
      out.det_index = out.matched ? matched_det[i] : -1;
      outputs.push_back(out);
    }
    kept.push_back(std::move(track));
  }
  tracks_ = std::move(kept);
  return outputs;
}

}  // namespace camdist
