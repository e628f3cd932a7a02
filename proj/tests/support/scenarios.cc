#include "scenarios.h"

#include <algorithm>
#include <map>

#include "camdist/rng.h"

namespace camdist::testing {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;

void Add(ScenarioFrame& frame, const Box& box, double z, int object) {
  Observation3D obs;
  obs.bbox = box;
  obs.z = z;
  obs.frame_id = frame.frame_id;
  obs.det_index = static_cast<int>(frame.observations.size());
  frame.observations.push_back(obs);
  frame.object_ids.push_back(object);
}

}  // namespace

std::vector<ScenarioFrame> RandomBoxScene(uint64_t seed, int n_frames) {
  Rng rng(seed);
  struct Object {
    Box box;
    double vx, vy, z, vz;
    int first, last;
  };
  const int n_objects = 1 + static_cast<int>(rng.UniformInt(5));
  std::vector<Object> objects;
  for (int i = 0; i < n_objects; ++i) {
    Object o;
    o.box.w = rng.Uniform(30.0, 90.0);
    o.box.h = rng.Uniform(20.0, 70.0);
    o.box.x = rng.Uniform(60.0, kWidth - 160.0);
    o.box.y = rng.Uniform(60.0, kHeight - 140.0);
    o.vx = rng.Uniform(-4.0, 4.0);
    o.vy = rng.Uniform(-2.0, 2.0);
    o.z = rng.Uniform(3.0, 30.0);
    o.vz = rng.Uniform(-0.2, 0.2);
    o.first = static_cast<int>(rng.UniformInt(n_frames / 3));
    o.last = n_frames - 1 - static_cast<int>(rng.UniformInt(n_frames / 3));
    objects.push_back(o);
  }
  std::vector<ScenarioFrame> frames(n_frames);
  for (int t = 0; t < n_frames; ++t) {
    frames[t].frame_id = t;
    for (int i = 0; i < n_objects; ++i) {
      const Object& o = objects[i];
      if (t < o.first || t > o.last) continue;
      if (rng.Bernoulli(0.1)) continue;  // missed detection
      Box b = o.box;
      b.x += o.vx * t + rng.Uniform(-1.0, 1.0);
      b.y += o.vy * t + rng.Uniform(-1.0, 1.0);
      b.w *= 1.0 + rng.Uniform(-0.03, 0.03);
      b.h *= 1.0 + rng.Uniform(-0.03, 0.03);
      if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > kWidth || b.y + b.h > kHeight) {
        continue;
      }
      Add(frames[t], b, std::max(0.5, o.z + o.vz * t), i);
    }
  }
  return frames;
}

std::vector<ScenarioFrame> MeetAndBounceScene(double z_a, double z_b) {
  constexpr int kFrames = 21;
  constexpr double kSpeed = 8.0;
  std::vector<ScenarioFrame> frames(kFrames);
  for (int t = 0; t < kFrames; ++t) {
    frames[t].frame_id = t;
    const double offset = kSpeed * std::min(t, 2 * 10 - t);
    Add(frames[t], {100.0 + offset, 200.0, 40.0, 30.0}, z_a, 0);
    Add(frames[t], {260.0 - offset, 200.0, 40.0, 30.0}, z_b, 1);
  }
  return frames;
}

std::vector<ScenarioFrame> CrossingScene(double z_a, double z_b) {
  constexpr int kFrames = 21;
  std::vector<ScenarioFrame> frames(kFrames);
  for (int t = 0; t < kFrames; ++t) {
    frames[t].frame_id = t;
    Add(frames[t], {100.0 + 8.0 * t, 200.0 + 2.0 * t, 40.0, 30.0}, z_a, 0);
    Add(frames[t], {260.0 - 8.0 * t, 200.0 + 2.0 * t, 40.0, 30.0}, z_b, 1);
  }
  return frames;
}

std::vector<std::vector<TrackOutput>> RunTracker(
    const AssociationConfig& config, const std::vector<ScenarioFrame>& frames) {
  Sort25dTracker tracker(config);
  std::vector<std::vector<TrackOutput>> outputs;
  for (const ScenarioFrame& frame : frames) {
    outputs.push_back(tracker.Step(frame.frame_id, frame.observations));
  }
  return outputs;
}

int CountIdentitySwitches(const std::vector<ScenarioFrame>& frames,
                          const std::vector<std::vector<TrackOutput>>& outputs) {
  std::map<int, int> last_track;
  int switches = 0;
  for (size_t f = 0; f < frames.size(); ++f) {
    for (const TrackOutput& out : outputs[f]) {
      if (!out.matched) continue;
      const int object = frames[f].object_ids.at(out.det_index);
      const auto it = last_track.find(object);
      if (it != last_track.end() && it->second != out.track_id) ++switches;
      last_track[object] = out.track_id;
    }
  }
  return switches;
}

}  // namespace camdist::testing
