#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace camdist {

// Axis-aligned box in pixel units: top-left corner plus extent.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double center_u() const { return x + 0.5 * w; }
  double center_v() const { return y + 0.5 * h; }
};

double Iou(const Box& a, const Box& b);

// ((dist_max - |z_t - z_det|) / dist_max) clipped to [0, 1].
double DistZ(double z_track, double z_detection, double dist_max);

// alpha * iou + (1 - alpha) * dist_z.
double SimScore(double iou, double dist_z, double alpha);

struct Observation3D {
  Box bbox;
  double z = 0.0;  // instance distance, meters
  int frame_id = 0;
  int det_index = 0;
};

struct AssociationConfig {
  double alpha = 0.5;
  double dist_max = 4.0;
  double sim_threshold = 0.3;
  int max_age = 3;
  int min_hits = 2;
  // When false the filter tracks the 2D box only and the track depth is the
  // last observed distance.
  bool use_depth = true;
  double depth_measurement_std = 0.5;  // m

  void Validate() const;
};

inline constexpr double kMinPredictedDepth = 0.01;

// Constant-velocity Kalman state. With depth the layout is
// [u, v, s, r, z, du, dv, ds, dz]; without, [u, v, s, r, du, dv, ds], where
// (u, v) is the box center, s its area and r its aspect w/h.
struct TrackState {
  int track_id = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int age = 0;
  int hits = 0;
  int hit_streak = 0;
  int time_since_update = 0;
  double last_z = 0.0;

  Box bbox() const;
};

struct TrackOutput {
  int frame_id = 0;
  int track_id = 0;
  Box bbox;
  double z = 0.0;
  bool matched = false;
  int det_index = -1;  // -1 for coasting tracks
};

// SORT with a depth channel in the state and SimScore association.
class Sort25dTracker {
 public:
  explicit Sort25dTracker(AssociationConfig config = {});

  // Processes one frame. Frames must arrive with strictly increasing ids and
  // every observation must belong to `frame_id`. Emits every live track with
  // at least min_hits observations; coasting tracks report their prediction
  // with matched = false.
  std::vector<TrackOutput> Step(int frame_id,
                                std::span<const Observation3D> observations);

  const std::vector<TrackState>& tracks() const { return tracks_; }
  const AssociationConfig& config() const { return config_; }

 private:
  TrackState NewTrack(const Observation3D& observation);
  void Predict(TrackState& track) const;
  void Update(TrackState& track, const Observation3D& observation) const;
  double TrackDepth(const TrackState& track) const;

  AssociationConfig config_;
  std::vector<TrackState> tracks_;
  int next_id_ = 1;
  bool has_frame_ = false;
  int last_frame_id_ = 0;
};

}  // namespace camdist
