#include "camdist/formats.h"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "camdist/error.h"
#include "json.hpp"

namespace camdist {
namespace {

std::vector<std::string> SplitLines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> SplitFields(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string LineContext(size_t line_number) {
  return "line " + std::to_string(line_number) + ": ";
}

template <typename T>
T ParseNumber(const std::string& field, const std::string& context) {
  T value{};
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(context + "bad number '" + field + "'");
  }
  return value;
}

}  // namespace

std::string FormatDouble(double value) {
  if (!std::isfinite(value)) {
    throw InvalidArgumentError("cannot format a non-finite value");
  }
  std::array<char, 64> buffer;
  const auto [ptr, ec] =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buffer.data(), ptr);
}

std::string FormatDistancesCsv(const std::vector<DistanceRecord>& rows) {
  std::string out = kDistancesCsvHeader;
  out += '\n';
  for (const DistanceRecord& r : rows) {
    if (r.category.find_first_of(",\"\n\r") != std::string::npos) {
      throw InvalidArgumentError("category '" + r.category +
                                 "' cannot be written to CSV");
    }
    out += std::to_string(r.frame_id) + ',' + std::to_string(r.det_index) +
           ',' + r.category + ',' + FormatDouble(r.conf) + ',' +
           FormatDouble(r.distance_m) + ',' + std::to_string(r.n_pixels) +
           ',' + (r.fallback ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<DistanceRecord> ParseDistancesCsv(const std::string& text) {
  const std::vector<std::string> lines = SplitLines(text);
  if (lines.empty() || lines[0] != kDistancesCsvHeader) {
    throw ParseError("distances CSV: missing or unexpected header");
  }
  std::vector<DistanceRecord> rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string context = "distances CSV " + LineContext(i + 1);
    const std::vector<std::string> f = SplitFields(lines[i]);
    if (f.size() != 7) throw ParseError(context + "expected 7 fields");
    DistanceRecord r;
    r.frame_id = ParseNumber<int>(f[0], context);
    r.det_index = ParseNumber<int>(f[1], context);
    r.category = f[2];
    r.conf = ParseNumber<double>(f[3], context);
    r.distance_m = ParseNumber<double>(f[4], context);
    r.n_pixels = ParseNumber<int>(f[5], context);
    if (f[6] != "0" && f[6] != "1") {
      throw ParseError(context + "fallback must be 0 or 1");
    }
    r.fallback = f[6] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

void WriteDistancesCsv(const std::filesystem::path& path,
                       const std::vector<DistanceRecord>& rows) {
  WriteTextFile(path, FormatDistancesCsv(rows));
}

std::vector<DistanceRecord> ReadDistancesCsv(
    const std::filesystem::path& path) {
  return ParseDistancesCsv(ReadTextFile(path));
}

std::string FormatTracksJsonl(const std::vector<TrackOutput>& rows) {
  // Numbers are spliced in as shortest round-trip text so files are stable
  // across json library versions.
  std::string out;
  for (const TrackOutput& t : rows) {
    out += "{\"frame_id\":" + std::to_string(t.frame_id) +
           ",\"track_id\":" + std::to_string(t.track_id) + ",\"bbox_px\":[" +
           FormatDouble(t.bbox.x) + ',' + FormatDouble(t.bbox.y) + ',' +
           FormatDouble(t.bbox.w) + ',' + FormatDouble(t.bbox.h) +
           "],\"z_m\":" + FormatDouble(t.z) +
           ",\"matched\":" + (t.matched ? "true" : "false") + "}\n";
  }
  return out;
}

std::vector<TrackOutput> ParseTracksJsonl(const std::string& text) {
  std::vector<TrackOutput> rows;
  const std::vector<std::string> lines = SplitLines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string context = "tracks JSONL " + LineContext(i + 1);
    try {
      const nlohmann::json j = nlohmann::json::parse(lines[i]);
      TrackOutput t;
      t.frame_id = j.at("frame_id").get<int>();
      t.track_id = j.at("track_id").get<int>();
      const auto& b = j.at("bbox_px");
      if (!b.is_array() || b.size() != 4) {
        throw ParseError(context + "bbox_px must be [x, y, w, h]");
      }
      t.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                b[3].get<double>()};
      t.z = j.at("z_m").get<double>();
      t.matched = j.at("matched").get<bool>();
      rows.push_back(t);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(context + e.what());
    }
  }
  return rows;
}

void WriteTracksJsonl(const std::filesystem::path& path,
                      const std::vector<TrackOutput>& rows) {
  WriteTextFile(path, FormatTracksJsonl(rows));
}

std::vector<TrackOutput> ReadTracksJsonl(const std::filesystem::path& path) {
  return ParseTracksJsonl(ReadTextFile(path));
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buffer.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace camdist
