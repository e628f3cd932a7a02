#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "camdist/tracking.h"

namespace camdist {

// Shortest decimal that round-trips the double.
std::string FormatDouble(double value);

struct DistanceRecord {
  int frame_id = 0;
  int det_index = 0;
  std::string category;
  double conf = 0.0;
  double distance_m = 0.0;
  int n_pixels = 0;
  bool fallback = false;
};

inline constexpr const char* kDistancesCsvHeader =
    "frame_id,det_index,category,conf,distance_m,n_pixels,fallback";

std::string FormatDistancesCsv(const std::vector<DistanceRecord>& rows);
std::vector<DistanceRecord> ParseDistancesCsv(const std::string& text);
void WriteDistancesCsv(const std::filesystem::path& path,
                       const std::vector<DistanceRecord>& rows);
std::vector<DistanceRecord> ReadDistancesCsv(const std::filesystem::path& path);

// One JSON object per line:
//   {"frame_id", "track_id", "bbox_px":[x,y,w,h], "z_m", "matched"}
std::string FormatTracksJsonl(const std::vector<TrackOutput>& rows);
std::vector<TrackOutput> ParseTracksJsonl(const std::string& text);
void WriteTracksJsonl(const std::filesystem::path& path,
                      const std::vector<TrackOutput>& rows);
std::vector<TrackOutput> ReadTracksJsonl(const std::filesystem::path& path);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace camdist
