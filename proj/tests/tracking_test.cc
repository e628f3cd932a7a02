#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "camdist/error.h"
#include "camdist/rng.h"
#include "camdist/tracking.h"
#include "oracles.h"
#include "scenarios.h"

namespace camdist {
namespace {

using testing::CountIdentitySwitches;
using testing::RunTracker;
using testing::ScenarioFrame;

TEST(Iou, HandCases) {
  const Box a{0, 0, 2, 2};
  EXPECT_DOUBLE_EQ(Iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(Iou(a, {5, 5, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(Iou(a, {2, 0, 2, 2}), 0.0);  // touching edges
  EXPECT_NEAR(Iou(a, {1, 1, 2, 2}), 1.0 / 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(Iou(a, {0, 0, 0, 0}), 0.0);
}

TEST(Iou, SymmetricAndBounded) {
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const Box a{rng.Uniform(0, 10), rng.Uniform(0, 10), rng.Uniform(0.1, 5),
                rng.Uniform(0.1, 5)};
    const Box b{rng.Uniform(0, 10), rng.Uniform(0, 10), rng.Uniform(0.1, 5),
                rng.Uniform(0.1, 5)};
    const double iou = Iou(a, b);
    EXPECT_GE(iou, 0.0);
    EXPECT_LE(iou, 1.0);
    EXPECT_EQ(iou, Iou(b, a));
  }
}

TEST(DistZ, HandCases) {
  EXPECT_EQ(DistZ(7.0, 7.0, 4.0), 1.0);
  EXPECT_EQ(DistZ(10.0, 5.0, 4.0), 0.0);
  EXPECT_EQ(DistZ(5.0, 6.0, 4.0), 0.75);
  EXPECT_EQ(DistZ(6.0, 5.0, 4.0), 0.75);
  EXPECT_EQ(DistZ(1.0, 5.0, 4.0), 0.0);
  EXPECT_THROW(DistZ(1.0, 1.0, 0.0), InvalidArgumentError);
}

TEST(DistZ, MonotoneSymmetricBounded) {
  Rng rng(2);
  for (int i = 0; i < 5000; ++i) {
    const double zt = rng.Uniform(0.1, 30), zd = rng.Uniform(0.1, 30);
    const double dmax = rng.Uniform(0.5, 10);
    const double d = DistZ(zt, zd, dmax);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(d, DistZ(zd, zt, dmax));
    // Moving the detection further away never raises the similarity.
    const double further = zd >= zt ? zd + rng.Uniform(0, 3) : zd - rng.Uniform(0, 3);
    EXPECT_LE(DistZ(zt, further, dmax), d);
  }
}

TEST(SimScore, HandCasesAndLimits) {
  EXPECT_DOUBLE_EQ(SimScore(0.6, 0.8, 0.5), 0.7);
  EXPECT_EQ(SimScore(0.6, 0.8, 1.0), 0.6);
  EXPECT_EQ(SimScore(0.6, 0.8, 0.0), 0.8);
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double s = SimScore(rng.Uniform(), rng.Uniform(), rng.Uniform());
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(AssociationConfig, Validation) {
  AssociationConfig c;
  c.alpha = 1.5;
  EXPECT_THROW(Sort25dTracker{c}, InvalidArgumentError);
  c = {};
  c.dist_max = 0.0;
  EXPECT_THROW(Sort25dTracker{c}, InvalidArgumentError);
  c = {};
  c.max_age = -1;
  EXPECT_THROW(Sort25dTracker{c}, InvalidArgumentError);
  c = {};
  c.depth_measurement_std = 0.0;
  EXPECT_THROW(Sort25dTracker{c}, InvalidArgumentError);
}

Observation3D Obs(int frame, int det, Box box, double z) {
  Observation3D o;
  o.bbox = box;
  o.z = z;
  o.frame_id = frame;
  o.det_index = det;
  return o;
}

TEST(Tracker, StationaryBoxYieldsOneTrack) {
  Sort25dTracker tracker;
  std::set<int> ids;
  for (int t = 0; t < 10; ++t) {
    const std::vector<Observation3D> obs{Obs(t, 0, {100, 80, 40, 30}, 6.0)};
    const auto out = tracker.Step(t, obs);
    if (t == 0) {
      EXPECT_TRUE(out.empty());  // one hit, below min_hits
      continue;
    }
    ASSERT_EQ(out.size(), 1u);
    EXPECT_TRUE(out[0].matched);
    EXPECT_EQ(out[0].det_index, 0);
    EXPECT_NEAR(out[0].z, 6.0, 1e-6);
    EXPECT_NEAR(out[0].bbox.x, 100.0, 1e-6);
    ids.insert(out[0].track_id);
  }
  EXPECT_EQ(ids, std::set<int>{1});
}

TEST(Tracker, EmptyFramesCoastThenRetire) {
  AssociationConfig config;
  config.max_age = 2;
  Sort25dTracker tracker(config);
  for (int t = 0; t < 3; ++t) {
    tracker.Step(t, std::vector<Observation3D>{Obs(t, 0, {10, 10, 20, 20}, 4.0)});
  }
  const TrackState before = tracker.tracks().at(0);
  auto out = tracker.Step(3, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FALSE(out[0].matched);
  EXPECT_EQ(out[0].det_index, -1);
  EXPECT_EQ(tracker.tracks().at(0).hits, before.hits);
  EXPECT_EQ(tracker.tracks().at(0).time_since_update, 1);
  EXPECT_EQ(tracker.Step(4, {}).size(), 1u);
  EXPECT_TRUE(tracker.Step(5, {}).empty());
  EXPECT_TRUE(tracker.tracks().empty());
}

TEST(Tracker, RejectsOutOfOrderFramesAndBadObservations) {
  Sort25dTracker tracker;
  tracker.Step(5, {});
  EXPECT_THROW(tracker.Step(5, {}), OrderError);
  EXPECT_THROW(tracker.Step(4, {}), OrderError);
  EXPECT_THROW(
      tracker.Step(6, std::vector<Observation3D>{Obs(7, 0, {0, 0, 1, 1}, 1.0)}),
      InvalidArgumentError);
  EXPECT_THROW(
      tracker.Step(8, std::vector<Observation3D>{Obs(8, 0, {0, 0, 1, 1}, 0.0)}),
      InvalidArgumentError);
}

TEST(Tracker, PredictedDepthStaysPositive) {
  AssociationConfig config;
  config.max_age = 20;
  Sort25dTracker tracker(config);
  // Rapidly approaching, then lost: the coasting depth would go negative.
  for (int t = 0; t < 5; ++t) {
    tracker.Step(t, std::vector<Observation3D>{
                        Obs(t, 0, {100, 100, 40, 40}, 5.0 - 0.9 * t)});
  }
  for (int t = 5; t < 20; ++t) {
    for (const TrackOutput& out : tracker.Step(t, {})) {
      EXPECT_GE(out.z, kMinPredictedDepth);
    }
  }
}

TEST(Tracker, EquivalentToClassicSortWithoutDepth) {
  AssociationConfig config;
  config.alpha = 1.0;
  config.use_depth = false;
  config.sim_threshold = 0.3;
  testing::RefConfig ref_config;
  ref_config.iou_threshold = 0.3;
  ref_config.max_age = config.max_age;
  ref_config.min_hits = config.min_hits;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const std::vector<ScenarioFrame> frames = testing::RandomBoxScene(seed);
    Sort25dTracker tracker(config);
    testing::ReferenceSort2d reference(ref_config);
    for (const ScenarioFrame& frame : frames) {
      std::vector<testing::RefDetection> ref_dets;
      for (const Observation3D& o : frame.observations) {
        ref_dets.push_back({{o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h}, o.det_index});
      }
      const auto got = tracker.Step(frame.frame_id, frame.observations);
      const auto want = reference.Step(frame.frame_id, ref_dets);
      ASSERT_EQ(got.size(), want.size()) << "seed " << seed;
      for (size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].track_id, want[i].track_id);
        EXPECT_EQ(got[i].matched, want[i].matched);
        EXPECT_EQ(got[i].det_index, want[i].det_index);
        EXPECT_NEAR(got[i].bbox.x, want[i].box.x, 1e-6);
        EXPECT_NEAR(got[i].bbox.y, want[i].box.y, 1e-6);
        EXPECT_NEAR(got[i].bbox.w, want[i].box.w, 1e-6);
        EXPECT_NEAR(got[i].bbox.h, want[i].box.h, 1e-6);
      }
    }
  }
}

TEST(Tracker, DepthSeparatesBouncingAnimals) {
  const auto frames = testing::MeetAndBounceScene(5.0, 11.0);
  AssociationConfig config;
  config.dist_max = 4.0;
  config.alpha = 0.5;
  EXPECT_EQ(CountIdentitySwitches(frames, RunTracker(config, frames)), 0);
  config.alpha = 1.0;
  EXPECT_GE(CountIdentitySwitches(frames, RunTracker(config, frames)), 1);
}

TEST(Tracker, DepthAwareCrossingKeepsIdentities) {
  const auto frames = testing::CrossingScene(5.0, 11.0);
  AssociationConfig config;
  config.alpha = 0.5;
  EXPECT_EQ(CountIdentitySwitches(frames, RunTracker(config, frames)), 0);
}

TEST(Tracker, IdsNeverReusedAndEmissionBounded) {
  for (uint64_t seed = 100; seed < 130; ++seed) {
    const auto frames = testing::RandomBoxScene(seed, 60);
    Sort25dTracker tracker;
    std::set<int> retired;
    std::set<int> alive_before;
    for (const ScenarioFrame& frame : frames) {
      const auto out = tracker.Step(frame.frame_id, frame.observations);
      std::set<int> alive;
      for (const TrackState& t : tracker.tracks()) {
        EXPECT_EQ(retired.count(t.track_id), 0u) << "id reused";
        alive.insert(t.track_id);
      }
      for (int id : alive_before) {
        if (!alive.count(id)) retired.insert(id);
      }
      alive_before = alive;
      EXPECT_LE(out.size(), tracker.tracks().size());
      std::set<int> emitted;
      for (const TrackOutput& o : out) {
        EXPECT_TRUE(emitted.insert(o.track_id).second);
        EXPECT_TRUE(alive.count(o.track_id));
      }
    }
  }
}

TEST(Tracker, Deterministic) {
  const auto frames = testing::RandomBoxScene(77, 40);
  const auto a = RunTracker({}, frames);
  const auto b = RunTracker({}, frames);
  ASSERT_EQ(a.size(), b.size());
  for (size_t f = 0; f < a.size(); ++f) {
    ASSERT_EQ(a[f].size(), b[f].size());
    for (size_t i = 0; i < a[f].size(); ++i) {
      EXPECT_EQ(a[f][i].track_id, b[f][i].track_id);
      EXPECT_EQ(a[f][i].bbox.x, b[f][i].bbox.x);
      EXPECT_EQ(a[f][i].z, b[f][i].z);
    }
  }
}

TEST(Tracker, CovarianceStaysSymmetric) {
  const auto frames = testing::RandomBoxScene(9, 60);
  Sort25dTracker tracker;
  for (const ScenarioFrame& frame : frames) {
    tracker.Step(frame.frame_id, frame.observations);
    for (const TrackState& t : tracker.tracks()) {
      EXPECT_LT((t.cov - t.cov.transpose()).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_GT(t.cov.diagonal().minCoeff(), 0.0);
    }
  }
}

}  // namespace
}  // namespace camdist
