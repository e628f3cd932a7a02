#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "camdist/error.h"
#include "camdist/formats.h"
#include "camdist/rng.h"
#include "test_util.h"

namespace camdist {
namespace {

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(FormatDouble(5.0), "5");
  EXPECT_EQ(FormatDouble(-2.5), "-2.5");
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::ldexp(rng.Uniform(-1.0, 1.0),
                                static_cast<int>(rng.UniformInt(200)) - 100);
    EXPECT_EQ(std::stod(FormatDouble(x)), x);
  }
  EXPECT_THROW(FormatDouble(std::numeric_limits<double>::infinity()),
               InvalidArgumentError);
  EXPECT_THROW(FormatDouble(std::nan("")), InvalidArgumentError);
}

std::vector<DistanceRecord> SampleRows() {
  return {{0, 0, "1", 0.93, 5.25, 120, false},
          {0, 2, "1", 0.5, 12.001, 40, true},
          {3, 1, "deer", 0.2, 0.75, 1, false}};
}

TEST(DistancesCsv, Format) {
  const std::string text = FormatDistancesCsv(SampleRows());
  EXPECT_EQ(text,
            "frame_id,det_index,category,conf,distance_m,n_pixels,fallback\n"
            "0,0,1,0.93,5.25,120,0\n"
            "0,2,1,0.5,12.001,40,1\n"
            "3,1,deer,0.2,0.75,1,0\n");
}

TEST(DistancesCsv, RoundTripThroughFile) {
  testing::TempDir dir;
  WriteDistancesCsv(dir / "d.csv", SampleRows());
  const auto back = ReadDistancesCsv(dir / "d.csv");
  const auto rows = SampleRows();
  ASSERT_EQ(back.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].frame_id, rows[i].frame_id);
    EXPECT_EQ(back[i].det_index, rows[i].det_index);
    EXPECT_EQ(back[i].category, rows[i].category);
    EXPECT_EQ(back[i].conf, rows[i].conf);
    EXPECT_EQ(back[i].distance_m, rows[i].distance_m);
    EXPECT_EQ(back[i].n_pixels, rows[i].n_pixels);
    EXPECT_EQ(back[i].fallback, rows[i].fallback);
  }
  EXPECT_TRUE(ParseDistancesCsv(std::string(kDistancesCsvHeader) + "\n").empty());
}

TEST(DistancesCsv, ParseErrorsCarryLine) {
  const std::string header = std::string(kDistancesCsvHeader) + "\n";
  EXPECT_THROW(ParseDistancesCsv(""), ParseError);
  EXPECT_THROW(ParseDistancesCsv("a,b\n"), ParseError);
  try {
    ParseDistancesCsv(header + "0,0,1,0.9,5,10,0\n0,1,1,x,5,10,0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ParseDistancesCsv(header + "0,0,1,0.9,5,10\n"), ParseError);
  EXPECT_THROW(ParseDistancesCsv(header + "0,0,1,0.9,5,10,2\n"), ParseError);
  std::vector<DistanceRecord> bad{{0, 0, "a,b", 0.9, 1.0, 1, false}};
  EXPECT_THROW(FormatDistancesCsv(bad), InvalidArgumentError);
}

TEST(TracksJsonl, ExactLineFormat) {
  TrackOutput t;
  t.frame_id = 2;
  t.track_id = 7;
  t.bbox = {10.5, 20, 30.25, 40};
  t.z = 5.125;
  t.matched = true;
  t.det_index = 1;
  EXPECT_EQ(FormatTracksJsonl({t}),
            "{\"frame_id\":2,\"track_id\":7,\"bbox_px\":[10.5,20,30.25,40],"
            "\"z_m\":5.125,\"matched\":true}\n");
}

TEST(TracksJsonl, RoundTrip) {
  Rng rng(2);
  std::vector<TrackOutput> rows;
  for (int i = 0; i < 50; ++i) {
    TrackOutput t;
    t.frame_id = i / 3;
    t.track_id = 1 + static_cast<int>(rng.UniformInt(9));
    t.bbox = {rng.Uniform(0, 600), rng.Uniform(0, 400), rng.Uniform(1, 80),
              rng.Uniform(1, 80)};
    t.z = rng.Uniform(0.5, 60);
    t.matched = rng.Bernoulli(0.7);
    rows.push_back(t);
  }
  testing::TempDir dir;
  WriteTracksJsonl(dir / "t.jsonl", rows);
  const auto back = ReadTracksJsonl(dir / "t.jsonl");
  ASSERT_EQ(back.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].frame_id, rows[i].frame_id);
    EXPECT_EQ(back[i].track_id, rows[i].track_id);
    EXPECT_EQ(back[i].bbox.x, rows[i].bbox.x);
    EXPECT_EQ(back[i].bbox.h, rows[i].bbox.h);
    EXPECT_EQ(back[i].z, rows[i].z);
    EXPECT_EQ(back[i].matched, rows[i].matched);
  }
  EXPECT_EQ(FormatTracksJsonl(back), FormatTracksJsonl(rows));
}

TEST(TracksJsonl, ParseErrors) {
  EXPECT_TRUE(ParseTracksJsonl("").empty());
  EXPECT_THROW(ParseTracksJsonl("{\"frame_id\":1}\n"), ParseError);
  EXPECT_THROW(ParseTracksJsonl("not json\n"), ParseError);
  EXPECT_THROW(ParseTracksJsonl("{\"frame_id\":0,\"track_id\":1,\"bbox_px\":[1,2,3],"
                                "\"z_m\":1,\"matched\":true}\n"),
               ParseError);
}

TEST(TextFiles, Errors) {
  testing::TempDir dir;
  EXPECT_THROW(ReadTextFile(dir / "missing.txt"), IoError);
  EXPECT_THROW(WriteTextFile(dir / "no/such/dir/x.txt", "x"), IoError);
  WriteTextFile(dir / "x.txt", "abc\n");
  EXPECT_EQ(ReadTextFile(dir / "x.txt"), "abc\n");
}

}  // namespace
}  // namespace camdist
