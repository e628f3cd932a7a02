#include "camdist/instances.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "camdist/error.h"

namespace camdist {
namespace {

constexpr double kSnapTolerancePx = 1e-6;

int FloorSnapped(double value) {
  const double nearest = std::round(value);
  if (std::abs(value - nearest) <= kSnapTolerancePx) {
    return static_cast<int>(nearest);
  }
  return static_cast<int>(std::floor(value));
}

int CeilSnapped(double value) {
  const double nearest = std::round(value);
  if (std::abs(value - nearest) <= kSnapTolerancePx) {
    return static_cast<int>(nearest);
  }
  return static_cast<int>(std::ceil(value));
}

PixelRect RectFromEdges(double x0, double y0, double x1, double y1) {
  const int left = FloorSnapped(x0);
  const int top = FloorSnapped(y0);
  return {left, top, CeilSnapped(x1) - left, CeilSnapped(y1) - top};
}

// Nearest pixel edge, halves rounding up. Values within tolerance of a half
// are snapped first so float noise cannot flip the direction.
int RoundEdge(double value) {
  const double twice = std::round(2.0 * value);
  if (std::abs(2.0 * value - twice) <= 2.0 * kSnapTolerancePx) {
    value = 0.5 * twice;
  }
  return static_cast<int>(std::floor(value + 0.5));
}

}  // namespace

PixelRect ClipRect(const PixelRect& rect, ImageSize image) {
  const int x0 = std::clamp(rect.x, 0, image.width);
  const int y0 = std::clamp(rect.y, 0, image.height);
  const int x1 = std::clamp(rect.x_end(), 0, image.width);
  const int y1 = std::clamp(rect.y_end(), 0, image.height);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

PixelRect ToPixelRect(const NormalizedBox& box, ImageSize image) {
  const double x0 = box.x * image.width;
  const double y0 = box.y * image.height;
  const double x1 = (box.x + box.w) * image.width;
  const double y1 = (box.y + box.h) * image.height;
  return ClipRect(RectFromEdges(x0, y0, x1, y1), image);
}

PixelRect ExpandBbox(const Detection& detection, ImageSize image) {
  const NormalizedBox& b = detection.bbox;
  const double cx = (b.x + 0.5 * b.w) * image.width;
  const double cy = (b.y + 0.5 * b.h) * image.height;
  const double w = b.w * image.width;
  const double h = b.h * image.height;
  // Outward rounding here could push the area past 4x the box; nearest
  // rounding keeps it within that while the union keeps the box covered.
  const PixelRect box = ToPixelRect(b, image);
  const int left = std::min(RoundEdge(cx - w), box.x);
  const int top = std::min(RoundEdge(cy - h), box.y);
  const int right = std::max(RoundEdge(cx + w), box.x_end());
  const int bottom = std::max(RoundEdge(cy + h), box.y_end());
  return ClipRect({left, top, right - left, bottom - top}, image);
}

double AttentionMap::At(int u, int v) const {
  // Nearest source sample for the pixel center.
  const double fu = (u - crop.x + 0.5) * values.width() / crop.w;
  const double fv = (v - crop.y + 0.5) * values.height() / crop.h;
  const int su = std::clamp(static_cast<int>(std::floor(fu)), 0,
                            values.width() - 1);
  const int sv = std::clamp(static_cast<int>(std::floor(fv)), 0,
                            values.height() - 1);
  return values(su, sv);
}

InstanceMask ThresholdAttention(const AttentionMap& attention,
                                const Detection& detection, ImageSize image) {
  InstanceMask mask;
  mask.detection = detection;
  mask.bbox = ToPixelRect(detection.bbox, image);
  if (attention.values.num_pixels() == 0 || attention.crop.empty()) {
    throw InvalidArgumentError("attention map is empty");
  }
  if (!attention.crop.Contains(mask.bbox)) {
    throw InvalidArgumentError(
        "attention crop does not cover the detection box");
  }
  double max_attention = 0.0;
  for (double a : attention.values.data()) {
    if (!std::isfinite(a) || a < 0.0) {
      throw InvalidArgumentError(
          "attention values must be finite and nonnegative");
    }
    max_attention = std::max(max_attention, a);
  }
  // 10% of zero would select every pixel; an all-zero map carries no
  // foreground and yields an empty mask instead.
  if (max_attention <= 0.0) return mask;
  const double threshold = kAttentionThresholdFraction * max_attention;
  for (int v = mask.bbox.y; v < mask.bbox.y_end(); ++v) {
    for (int u = mask.bbox.x; u < mask.bbox.x_end(); ++u) {
      if (attention.At(u, v) >= threshold) mask.pixels.emplace_back(u, v);
    }
  }
  return mask;
}

InstanceMask BboxMask(const Detection& detection, ImageSize image) {
  InstanceMask mask;
  mask.detection = detection;
  mask.bbox = ToPixelRect(detection.bbox, image);
  for (int v = mask.bbox.y; v < mask.bbox.y_end(); ++v) {
    for (int u = mask.bbox.x; u < mask.bbox.x_end(); ++u) {
      mask.pixels.emplace_back(u, v);
    }
  }
  return mask;
}

double Median(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("median of empty set");
  const size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + *mid);
}

InstanceDistance ComputeInstanceDistance(const InstanceMask& mask,
                                         const DepthMap& depth) {
  std::vector<double> values;
  values.reserve(mask.pixels.size());
  for (const Eigen::Vector2i& p : mask.pixels) {
    if (depth.values.InBounds(p.x(), p.y()) && depth.IsValid(p.x(), p.y())) {
      values.push_back(depth.Value(p.x(), p.y()));
    }
  }
  InstanceDistance result;
  if (values.empty()) {
    const PixelRect rect = ClipRect(mask.bbox, depth.size());
    for (int v = rect.y; v < rect.y_end(); ++v) {
      for (int u = rect.x; u < rect.x_end(); ++u) {
        if (depth.IsValid(u, v)) values.push_back(depth.Value(u, v));
      }
    }
    if (values.empty()) {
      std::ostringstream msg;
      msg << "frame " << mask.detection.frame_id << " detection "
          << mask.detection.det_index << ": no valid depth inside the box";
      throw InsufficientDataError(msg.str());
    }
    result.fallback_used = true;
  }
  result.n_pixels = static_cast<int>(values.size());
  result.distance_m = Median(std::move(values));
  return result;
}

namespace {

std::string StemOf(const std::string& file) {
  return std::filesystem::path(file).stem().string();
}

double ClampUnit(double value) { return std::clamp(value, 0.0, 1.0); }

Detection ParseDetection(const nlohmann::json& record,
                         const std::string& context) {
  if (!record.is_object()) throw ParseError(context + ": expected an object");
  Detection det;
  if (!record.contains("bbox")) throw ParseError(context + ".bbox: missing");
  const auto& bbox = record.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4) {
    throw ParseError(context + ".bbox: expected [x, y, w, h]");
  }
  double values[4];
  for (int k = 0; k < 4; ++k) {
    if (!bbox[k].is_number()) {
      throw ParseError(context + ".bbox[" + std::to_string(k) +
                       "]: expected a number");
    }
    values[k] = bbox[k].get<double>();
    if (!std::isfinite(values[k])) {
      throw ParseError(context + ".bbox[" + std::to_string(k) +
                       "]: not finite");
    }
  }
  det.bbox.x = ClampUnit(values[0]);
  det.bbox.y = ClampUnit(values[1]);
  det.bbox.w = std::min(values[2] - (det.bbox.x - values[0]), 1.0 - det.bbox.x);
  det.bbox.h = std::min(values[3] - (det.bbox.y - values[1]), 1.0 - det.bbox.y);
  if (!(det.bbox.w > 0.0) || !(det.bbox.h > 0.0)) {
    throw ParseError(context + ".bbox: empty box after clamping to the image");
  }
  if (!record.contains("conf") || !record.at("conf").is_number()) {
    throw ParseError(context + ".conf: expected a number");
  }
  det.confidence = record.at("conf").get<double>();
  if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
    throw ParseError(context + ".conf: must lie in [0, 1]");
  }
  if (!record.contains("category")) {
    throw ParseError(context + ".category: missing");
  }
  const auto& category = record.at("category");
  if (category.is_string()) {
    det.category = category.get<std::string>();
  } else if (category.is_number_integer()) {
    det.category = std::to_string(category.get<long>());
  } else {
    throw ParseError(context + ".category: expected a string");
  }
  return det;
}

}  // namespace

std::vector<ImageDetections> ParseDetections(
    const nlohmann::json& document, const DetectionIngestOptions& options) {
  if (!document.is_object() || !document.contains("images") ||
      !document.at("images").is_array()) {
    throw ParseError("detections: expected an object with an 'images' array");
  }
  std::vector<ImageDetections> images;
  const auto& entries = document.at("images");
  for (size_t i = 0; i < entries.size(); ++i) {
    const std::string context = "images[" + std::to_string(i) + "]";
    const auto& entry = entries[i];
    if (!entry.is_object() || !entry.contains("file") ||
        !entry.at("file").is_string()) {
      throw ParseError(context + ".file: expected a string");
    }
    ImageDetections image;
    image.file = entry.at("file").get<std::string>();
    image.stem = StemOf(image.file);
    if (entry.contains("detections") && !entry.at("detections").is_null()) {
      const auto& dets = entry.at("detections");
      if (!dets.is_array()) {
        throw ParseError(context + ".detections: expected an array");
      }
      for (size_t k = 0; k < dets.size(); ++k) {
        Detection det = ParseDetection(
            dets[k], context + ".detections[" + std::to_string(k) + "]");
        det.det_index = static_cast<int>(k);
        if (det.confidence < options.confidence_floor) continue;
        image.detections.push_back(std::move(det));
      }
    }
    images.push_back(std::move(image));
  }
  std::stable_sort(images.begin(), images.end(),
                   [](const ImageDetections& a, const ImageDetections& b) {
                     return a.stem < b.stem;
                   });
  for (size_t i = 0; i + 1 < images.size(); ++i) {
    if (images[i].stem == images[i + 1].stem) {
      throw ParseError("detections: duplicate image stem '" + images[i].stem +
                       "'");
    }
  }
  for (size_t i = 0; i < images.size(); ++i) {
    images[i].frame_id = static_cast<int>(i);
    for (Detection& det : images[i].detections) {
      det.frame_id = static_cast<int>(i);
    }
  }
  return images;
}

std::vector<ImageDetections> IngestDetections(
    const std::filesystem::path& path, const DetectionIngestOptions& options) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open " + path.string());
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(file);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return ParseDetections(document, options);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json DetectionsToJson(const std::vector<ImageDetections>& images) {
  nlohmann::json entries = nlohmann::json::array();
  for (const ImageDetections& image : images) {
    nlohmann::json dets = nlohmann::json::array();
    for (const Detection& det : image.detections) {
      dets.push_back({{"category", det.category},
                      {"conf", det.confidence},
                      {"bbox", {det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h}}});
    }
    entries.push_back({{"file", image.file}, {"detections", dets}});
  }
  return {{"images", entries}};
}

}  // namespace camdist
