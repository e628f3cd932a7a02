#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "camdist/error.h"
#include "camdist/evaluation.h"
#include "camdist/rng.h"
#include "oracles.h"
#include "test_util.h"

namespace camdist {
namespace {

const double nan = std::nan("");

TEST(DepthMetrics, HandEvaluatedPair) {
  const DepthMap d = testing::MakeDepth(2, 1, {2.0, 4.0});
  const DepthMap g = testing::MakeDepth(2, 1, {1.0, 4.0}, DepthKind::kGroundTruth);
  const DepthReport r = ComputeDepthMetrics(d, g);
  EXPECT_NEAR(r.rms, std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(r.rel, 0.5, 1e-12);
  EXPECT_NEAR(r.mae, 0.5, 1e-12);
  EXPECT_NEAR(r.me, 0.5, 1e-12);
  EXPECT_EQ(r.n_valid, 2u);
}

TEST(DepthMetrics, IdenticalIsZero) {
  Rng rng(1);
  const DepthMap d = testing::RandomDepth(rng, 10, 8, 0.5, 20.0, 0.1);
  const DepthReport r = ComputeDepthMetrics(d, d);
  EXPECT_EQ(r.rms, 0.0);
  EXPECT_EQ(r.rel, 0.0);
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_EQ(r.me, 0.0);
}

TEST(DepthMetrics, CapAndValidityFilter) {
  const DepthMap d = testing::MakeDepth(4, 1, {2.0, 4.0, 31.0, 9.0});
  const DepthMap g = testing::MakeDepth(4, 1, {1.0, 4.0, 30.0, nan});
  const DepthReport r = ComputeDepthMetrics(d, g, 25.0);
  EXPECT_EQ(r.n_valid, 2u);
  EXPECT_NEAR(r.mae, 0.5, 1e-12);
  // The cap is strict.
  EXPECT_EQ(ComputeDepthMetrics(d, g, 30.0).n_valid, 2u);
  EXPECT_EQ(ComputeDepthMetrics(d, g, 30.5).n_valid, 3u);
  const DepthMap d_invalid = testing::MakeDepth(4, 1, {nan, 4.0, 31.0, 9.0});
  EXPECT_EQ(ComputeDepthMetrics(d_invalid, g).n_valid, 1u);
}

TEST(DepthMetrics, Errors) {
  const DepthMap a = testing::MakeDepth(2, 1, {1.0, 2.0});
  EXPECT_THROW(ComputeDepthMetrics(a, testing::MakeDepth(1, 2, {1.0, 2.0})),
               DimensionMismatchError);
  EXPECT_THROW(ComputeDepthMetrics(a, testing::MakeDepth(2, 1, {30.0, 40.0})),
               InsufficientDataError);
  EXPECT_THROW(ComputeDepthMetrics(a, testing::MakeDepth(2, 1, {nan, nan})),
               InsufficientDataError);
}

TEST(DepthMetrics, InequalitiesOnRandomRasters) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const DepthMap d = testing::RandomDepth(rng, 12, 9, 0.1, 40.0, 0.2);
    const DepthMap g = testing::RandomDepth(rng, 12, 9, 0.5, 30.0, 0.2);
    DepthReport r;
    try {
      r = ComputeDepthMetrics(d, g);
    } catch (const InsufficientDataError&) {
      continue;
    }
    EXPECT_LE(r.mae, r.rms * (1 + 1e-12));
    EXPECT_LE(std::abs(r.me), r.mae * (1 + 1e-12));
    EXPECT_GE(r.rel, 0.0);
  }
}

TEST(DepthMetrics, PermutationInvariant) {
  Rng rng(3);
  std::vector<double> pred(50), gt(50);
  for (int i = 0; i < 50; ++i) {
    pred[i] = rng.Uniform(0.5, 20);
    gt[i] = rng.Uniform(0.5, 20);
  }
  const DepthReport base = ComputeErrorMetrics(pred, gt);
  for (int trial = 0; trial < 20; ++trial) {
    for (size_t i = pred.size(); i > 1; --i) {
      const size_t j = rng.UniformInt(i);
      std::swap(pred[i - 1], pred[j]);
      std::swap(gt[i - 1], gt[j]);
    }
    const DepthReport r = ComputeErrorMetrics(pred, gt);
    EXPECT_NEAR(r.rms, base.rms, 1e-12);
    EXPECT_NEAR(r.rel, base.rel, 1e-12);
    EXPECT_NEAR(r.mae, base.mae, 1e-12);
    EXPECT_NEAR(r.me, base.me, 1e-12);
  }
}

TEST(InstanceMetrics, PairsById) {
  const std::vector<InstanceValue> pred{{"a", 2.0}};
  const std::vector<InstanceValue> gt{{"a", 1.0}};
  const DepthReport r = ComputeInstanceDepthMetrics(pred, gt);
  EXPECT_EQ(r.mae, 1.0);
  EXPECT_EQ(r.rel, 1.0);
  EXPECT_EQ(r.n_valid, 1u);
  const std::vector<InstanceValue> p2{{"b", 3.0}, {"a", 5.0}};
  const std::vector<InstanceValue> g2{{"a", 5.0}, {"b", 3.0}};
  EXPECT_EQ(ComputeInstanceDepthMetrics(p2, g2).rms, 0.0);
}

TEST(InstanceMetrics, IdMismatchErrors) {
  const std::vector<InstanceValue> gt{{"a", 1.0}, {"b", 2.0}};
  EXPECT_THROW(ComputeInstanceDepthMetrics(std::vector<InstanceValue>{{"a", 1.0}}, gt),
               InvalidArgumentError);
  EXPECT_THROW(ComputeInstanceDepthMetrics(
                   std::vector<InstanceValue>{{"a", 1.0}, {"c", 2.0}}, gt),
               InvalidArgumentError);
  EXPECT_THROW(ComputeInstanceDepthMetrics(
                   std::vector<InstanceValue>{{"a", 1.0}, {"a", 2.0}}, gt),
               InvalidArgumentError);
}

TEST(InstanceMetrics, PerSceneGrouping) {
  std::map<std::string, SceneInstances> scenes;
  scenes["s1"] = {{{"a", 2.0}}, {{"a", 1.0}}};
  scenes["s2"] = {{{"a", 4.0}, {"b", 4.0}}, {{"a", 4.0}, {"b", 5.0}}};
  const auto reports = ComputePerSceneInstanceMetrics(scenes);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports.at("s1").mae, 1.0);
  EXPECT_EQ(reports.at("s2").mae, 0.5);
  EXPECT_EQ(reports.at("s2").n_valid, 2u);
}

TEST(Quartiles, LinearInterpolation) {
  const QuartileSummary q = ComputeQuartiles({4.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_EQ(q.min, 1.0);
  EXPECT_EQ(q.q1, 2.0);
  EXPECT_EQ(q.median, 3.0);
  EXPECT_EQ(q.q3, 4.0);
  EXPECT_EQ(q.max, 5.0);
  const QuartileSummary even = ComputeQuartiles({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(even.q1, 1.75);
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.q3, 3.25);
  EXPECT_EQ(ComputeQuartiles({7.0}).q3, 7.0);
  EXPECT_THROW(ComputeQuartiles({}), InsufficientDataError);
}

TrackPoint Point(int id, double x, double y = 0.0, double z = 10.0) {
  TrackPoint p;
  p.id = id;
  p.center = {x, y, z};
  p.half_extent = {0.5, 0.5, 0.5};
  return p;
}

TEST(Iou3d, HandCases) {
  EXPECT_DOUBLE_EQ(Iou3d(Point(1, 0), Point(2, 0)), 1.0);
  EXPECT_DOUBLE_EQ(Iou3d(Point(1, 0), Point(2, 0.5)), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(Iou3d(Point(1, 0), Point(2, 2)), 0.0);
}

TEST(TrackPointFromBox, CenterAndExtent) {
  const CameraIntrinsics k = CameraIntrinsics::FromFocal(200, 100, 100.0,
                                                         Eigen::Vector2d(100, 50));
  const TrackPoint p = TrackPointFromBox(3, {90, 40, 20, 10}, 5.0, k);
  EXPECT_EQ(p.id, 3);
  EXPECT_NEAR(p.center.x(), 0.0, 1e-12);
  EXPECT_NEAR(p.center.y(), -0.25, 1e-12);  // center row 45 vs v0 = 50
  EXPECT_NEAR(p.center.z(), 5.0, 1e-12);
  EXPECT_NEAR(p.half_extent.x(), 0.5, 1e-12);
  EXPECT_NEAR(p.half_extent.y(), 0.25, 1e-12);
  EXPECT_NEAR(p.half_extent.z(), 0.5, 1e-12);
}

// One frame per entry: gt points and predicted points.
std::vector<FrameTracks> Frames(const std::vector<std::vector<TrackPoint>>& points) {
  std::vector<FrameTracks> frames;
  for (size_t t = 0; t < points.size(); ++t) {
    frames.push_back({static_cast<int>(t), points[t]});
  }
  return frames;
}

TEST(Mot, PerfectTracking) {
  const auto gt = Frames({{Point(1, 0), Point(2, 5)}, {Point(1, 1), Point(2, 6)}});
  const MotReport r = ComputeMotMetrics(gt, gt);
  EXPECT_EQ(r.mota, 1.0);
  EXPECT_EQ(r.motp_m, 0.0);
  EXPECT_EQ(r.motp_iou3d, 1.0);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(r.tp, 4);
  EXPECT_EQ(r.num_gt, 4);
  EXPECT_EQ(r.precision, 1.0);
}

TEST(Mot, FormulaFixture) {
  // 10 ground-truth objects over 5 frames; one missed, one spurious.
  std::vector<std::vector<TrackPoint>> gt(5), pred(5);
  for (int t = 0; t < 5; ++t) {
    gt[t] = {Point(1, 0), Point(2, 10)};
    pred[t] = {Point(7, 0), Point(8, 10)};
  }
  pred[2] = {Point(7, 0)};
  pred[4].push_back(Point(9, 30));
  const MotReport r = ComputeMotMetrics(Frames(pred), Frames(gt));
  EXPECT_EQ(r.num_gt, 10);
  EXPECT_EQ(r.fn, 1);
  EXPECT_EQ(r.fp, 1);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(r.tp + r.fn, r.num_gt);
  EXPECT_DOUBLE_EQ(r.mota, 0.8);
}

TEST(Mot, MotpIsMeanTpDistance) {
  const auto gt = Frames({{Point(1, 0), Point(2, 10)}});
  const auto pred = Frames({{Point(5, 0.4), Point(6, 10.8)}});
  const MotReport r = ComputeMotMetrics(pred, gt);
  EXPECT_EQ(r.tp, 2);
  EXPECT_NEAR(r.motp_m, 0.6, 1e-12);
}

TEST(Mot, ThresholdIsStrict) {
  const auto gt = Frames({{Point(1, 0)}});
  EXPECT_EQ(ComputeMotMetrics(Frames({{Point(5, 2.2)}}), gt, 2.2).tp, 0);
  EXPECT_EQ(ComputeMotMetrics(Frames({{Point(5, 2.1)}}), gt, 2.2).tp, 1);
}

TEST(Mot, IdentitySwitches) {
  const auto gt = Frames({{Point(1, 0)}, {Point(1, 0)}, {}, {Point(1, 0)}, {Point(1, 0)}});
  const auto pred = Frames({{Point(5, 0)}, {Point(6, 0)}, {}, {Point(6, 0)}, {Point(5, 0)}});
  const MotReport r = ComputeMotMetrics(pred, gt);
  EXPECT_EQ(r.ids, 2);
  EXPECT_DOUBLE_EQ(r.mota, 1.0 - 2.0 / 4.0);
}

TEST(Mot, DeletingPredictionsAndAddingFalsePositives) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<TrackPoint>> gt(6), pred(6), none(6), extra;
    for (int t = 0; t < 6; ++t) {
      const int n = 1 + static_cast<int>(rng.UniformInt(4));
      for (int i = 0; i < n; ++i) {
        gt[t].push_back(Point(i + 1, 10.0 * i));
        pred[t].push_back(Point(i + 100, 10.0 * i + rng.Uniform(-0.5, 0.5)));
      }
    }
    const MotReport empty = ComputeMotMetrics(Frames(none), Frames(gt));
    EXPECT_EQ(empty.mota, 0.0);
    EXPECT_EQ(empty.fp, 0);
    EXPECT_EQ(empty.ids, 0);
    const MotReport base = ComputeMotMetrics(Frames(pred), Frames(gt));
    extra = pred;
    extra[rng.UniformInt(6)].push_back(Point(999, 500.0));
    const MotReport plus = ComputeMotMetrics(Frames(extra), Frames(gt));
    EXPECT_NEAR(base.mota - plus.mota, 1.0 / base.num_gt, 1e-12);
  }
}

TEST(Mot, Errors) {
  const auto gt = Frames({{Point(1, 0)}, {Point(1, 0)}});
  EXPECT_THROW(ComputeMotMetrics(Frames({{Point(1, 0)}}), gt), DimensionMismatchError);
  auto shifted = gt;
  shifted[1].frame_id = 5;
  EXPECT_THROW(ComputeMotMetrics(shifted, gt), DimensionMismatchError);
  EXPECT_THROW(ComputeMotMetrics(Frames({{}}), Frames({{}})), InsufficientDataError);
  EXPECT_THROW(ComputeMotMetrics(Frames({{Point(1, 0), Point(1, 5)}}),
                                 Frames({{Point(1, 0)}})),
               InvalidArgumentError);
}

TEST(MatchFrame, EqualsExhaustiveSearch) {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int ng = static_cast<int>(rng.UniformInt(5));
    const int np = static_cast<int>(rng.UniformInt(5));
    std::vector<TrackPoint> gt, pred;
    for (int i = 0; i < ng; ++i) {
      gt.push_back(Point(i, rng.Uniform(0, 6), rng.Uniform(0, 3), rng.Uniform(2, 8)));
    }
    for (int i = 0; i < np; ++i) {
      pred.push_back(Point(i, rng.Uniform(0, 6), rng.Uniform(0, 3), rng.Uniform(2, 8)));
    }
    const std::vector<FrameMatch> got = MatchFrame(gt, pred, 2.2);
    // Oracle: exhaustive minimum total distance over all assignments, then
    // the same post-hoc threshold.
    Eigen::MatrixXd dist(ng, np);
    for (int g = 0; g < ng; ++g) {
      for (int p = 0; p < np; ++p) dist(g, p) = (gt[g].center - pred[p].center).norm();
    }
    const std::vector<int> best = testing::BruteForceMinCostAssignment(dist);
    int expected_tp = 0;
    double expected_sum = 0.0;
    for (int g = 0; g < ng; ++g) {
      if (best[g] >= 0 && dist(g, best[g]) < 2.2) {
        ++expected_tp;
        expected_sum += dist(g, best[g]);
      }
    }
    double got_sum = 0.0;
    for (const FrameMatch& m : got) {
      EXPECT_LT(m.distance, 2.2);
      EXPECT_NEAR(m.distance, dist(m.gt_index, m.pred_index), 1e-12);
      got_sum += m.distance;
    }
    EXPECT_EQ(static_cast<int>(got.size()), expected_tp);
    EXPECT_NEAR(got_sum, expected_sum, 1e-9);
  }
}

TEST(Reports, JsonFields) {
  MotReport r;
  r.mota = 0.5;
  r.tp = 3;
  const nlohmann::json j = ToJson(r);
  EXPECT_EQ(j.at("mota").get<double>(), 0.5);
  EXPECT_EQ(j.at("tp").get<int>(), 3);
  EXPECT_TRUE(j.contains("motp_m"));
  EXPECT_TRUE(j.contains("motp_iou3d"));
  const nlohmann::json d = ToJson(DepthReport{1, 2, 3, 4, 5});
  EXPECT_EQ(d.at("n_valid").get<int>(), 5);
  EXPECT_EQ(d.at("rel").get<double>(), 2.0);
}

}  // namespace
}  // namespace camdist
