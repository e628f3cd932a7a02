#include "camdist/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "camdist/error.h"
#include "camdist/rng.h"

namespace camdist {
namespace {

constexpr uint64_t kConfidenceStream = 1;
constexpr uint64_t kDropoutStream = 2;
constexpr const char* kAnimalCategory = "1";

std::string AnimalPath(size_t index, const char* field) {
  std::ostringstream path;
  path << "animals[" << index << "]." << field;
  return path.str();
}

void CheckFinitePositive(double value, const std::string& path) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw InvalidArgumentError(path + ": must be finite and positive");
  }
}

void CheckAnimalDepth(double z, const std::string& path) {
  if (!(z > kMinAnimalDepthM && z <= kMaxAnimalDepthM)) {
    std::ostringstream msg;
    msg << path << ": depth " << z << " m outside (" << kMinAnimalDepthM
        << ", " << kMaxAnimalDepthM << "]";
    throw InvalidArgumentError(msg.str());
  }
}

Eigen::Vector3d PositionAt(const AnimalSpec& animal, int frame) {
  return animal.position + static_cast<double>(frame) * animal.velocity;
}

DepthMap RenderGround(const SceneSpec& spec) {
  const CameraIntrinsics& k = spec.intrinsics;
  DepthMap depth(k.width, k.height, DepthKind::kGroundTruth);
  const double tilt = spec.ground_tilt_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(tilt);
  const double sin_t = std::sin(tilt);
  for (int v = 0; v < k.height; ++v) {
    // Downward component of the ray through row v, per unit optical depth.
    const double down = cos_t * (v - k.v0) / k.focal_px + sin_t;
    if (!(down > 0.0)) continue;
    const double z = spec.ground_height_m / down;
    if (!(z <= spec.max_depth_m)) continue;
    for (int u = 0; u < k.width; ++u) depth.Set(u, v, z);
  }
  return depth;
}

}  // namespace

void SceneSpec::Validate() const {
  try {
    intrinsics.Validate();
  } catch (const Error& e) {
    throw InvalidArgumentError(std::string("intrinsics: ") + e.what());
  }
  CheckFinitePositive(ground_height_m, "ground.height_m");
  if (!std::isfinite(ground_tilt_deg) || std::abs(ground_tilt_deg) >= 90.0) {
    throw InvalidArgumentError("ground.tilt_deg: must lie in (-90, 90)");
  }
  if (n_frames < 1) throw InvalidArgumentError("n_frames: must be >= 1");
  CheckFinitePositive(max_depth_m, "max_depth_m");
  if (!(dropout_frac >= 0.0 && dropout_frac < 1.0)) {
    throw InvalidArgumentError("dropout_frac: must lie in [0, 1)");
  }
  for (size_t i = 0; i < animals.size(); ++i) {
    const AnimalSpec& a = animals[i];
    CheckFinitePositive(a.width_m, AnimalPath(i, "size_m[0]"));
    CheckFinitePositive(a.height_m, AnimalPath(i, "size_m[1]"));
    for (int c = 0; c < 3; ++c) {
      const std::string suffix = "[" + std::to_string(c) + "]";
      if (!std::isfinite(a.position[c])) {
        throw InvalidArgumentError(AnimalPath(i, "position") + suffix +
                                   ": must be finite");
      }
      if (!std::isfinite(a.velocity[c])) {
        throw InvalidArgumentError(AnimalPath(i, "velocity") + suffix +
                                   ": must be finite");
      }
    }
    CheckAnimalDepth(a.position.z(), AnimalPath(i, "position[2]"));
  }
}

double GroundContactY(const SceneSpec& spec, double z) {
  const double tilt = spec.ground_tilt_deg * std::numbers::pi / 180.0;
  return (spec.ground_height_m - z * std::sin(tilt)) / std::cos(tilt);
}

PixelRect AnimalRect(const AnimalSpec& animal, int frame,
                     const CameraIntrinsics& intrinsics) {
  const Eigen::Vector3d p = PositionAt(animal, frame);
  const double scale = intrinsics.focal_px / p.z();
  const double u_left = intrinsics.u0 + (p.x() - 0.5 * animal.width_m) * scale;
  const double u_right = intrinsics.u0 + (p.x() + 0.5 * animal.width_m) * scale;
  const double v_top = intrinsics.v0 + (p.y() - 0.5 * animal.height_m) * scale;
  const double v_bottom =
      intrinsics.v0 + (p.y() + 0.5 * animal.height_m) * scale;
  const int x0 = static_cast<int>(std::lround(u_left));
  const int x1 = static_cast<int>(std::lround(u_right));
  const int y0 = static_cast<int>(std::lround(v_top));
  const int y1 = static_cast<int>(std::lround(v_bottom));
  return {x0, y0, x1 - x0, y1 - y0};
}

std::vector<SyntheticFrame> RenderScene(const SceneSpec& spec) {
  spec.Validate();
  const CameraIntrinsics& k = spec.intrinsics;
  const ImageSize image = k.size();
  const PixelRect frame_rect{0, 0, k.width, k.height};
  const DepthMap ground = RenderGround(spec);

  std::vector<SyntheticFrame> frames;
  frames.reserve(spec.n_frames);
  for (int t = 0; t < spec.n_frames; ++t) {
    SyntheticFrame frame;
    frame.gt_depth = ground;
    // Owner of each pixel: animal index, or -1 for ground / nothing.
    Raster<int> owner(k.width, k.height, -1);
    std::vector<PixelRect> rects(spec.animals.size());
    for (size_t i = 0; i < spec.animals.size(); ++i) {
      const AnimalSpec& animal = spec.animals[i];
      const double z = PositionAt(animal, t).z();
      std::ostringstream where;
      where << "animals[" << i << "] at frame " << t;
      CheckAnimalDepth(z, where.str());
      const PixelRect rect = AnimalRect(animal, t, k);
      if (rect.empty() || !frame_rect.Contains(rect)) {
        throw InvalidArgumentError(where.str() +
                                   ": rectangle leaves the image");
      }
      rects[i] = rect;
      for (int v = rect.y; v < rect.y_end(); ++v) {
        for (int u = rect.x; u < rect.x_end(); ++u) {
          DepthMap& depth = frame.gt_depth;
          if (depth.IsValid(u, v) && !(z < depth.Value(u, v))) continue;
          depth.Set(u, v, z);
          owner(u, v) = static_cast<int>(i);
        }
      }
    }

    Rng confidence_rng(
        DeriveSeed(DeriveSeed(spec.seed, kConfidenceStream), t));
    for (size_t i = 0; i < spec.animals.size(); ++i) {
      const PixelRect& rect = rects[i];
      std::vector<Eigen::Vector2i> pixels;
      for (int v = rect.y; v < rect.y_end(); ++v) {
        for (int u = rect.x; u < rect.x_end(); ++u) {
          if (owner(u, v) == static_cast<int>(i)) pixels.emplace_back(u, v);
        }
      }
      const double confidence = 0.8 + 0.2 * confidence_rng.Uniform();
      if (pixels.empty()) continue;

      Detection det;
      det.bbox.x = static_cast<double>(rect.x) / k.width;
      det.bbox.y = static_cast<double>(rect.y) / k.height;
      // Same edge rule as detection ingestion, so files parse back unchanged.
      det.bbox.w = std::min(static_cast<double>(rect.w) / k.width,
                            1.0 - det.bbox.x);
      det.bbox.h = std::min(static_cast<double>(rect.h) / k.height,
                            1.0 - det.bbox.y);
      det.confidence = confidence;
      det.category = kAnimalCategory;
      det.frame_id = t;
      det.det_index = static_cast<int>(frame.detections.size());

      AttentionMap attention;
      attention.crop = ExpandBbox(det, image);
      attention.values = Raster<double>(attention.crop.w, attention.crop.h);
      for (const Eigen::Vector2i& p : pixels) {
        attention.values(p.x() - attention.crop.x, p.y() - attention.crop.y) =
            1.0;
      }

      InstanceMask mask;
      mask.pixels = std::move(pixels);
      mask.detection = det;
      mask.bbox = rect;

      frame.detections.push_back(det);
      frame.masks.push_back(std::move(mask));
      frame.attention.push_back(std::move(attention));
      frame.animal_ids.push_back(static_cast<int>(i));
      frame.gt_distances.push_back(PositionAt(spec.animals[i], t).z());
    }

    if (spec.dropout_frac > 0.0) {
      Rng dropout_rng(DeriveSeed(DeriveSeed(spec.seed, kDropoutStream), t));
      for (int v = 0; v < k.height; ++v) {
        for (int u = 0; u < k.width; ++u) {
          if (dropout_rng.Bernoulli(spec.dropout_frac)) {
            frame.gt_depth.Invalidate(u, v);
          }
        }
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

DisparityMap SynthDisparity(const DepthMap& ground_truth,
                            const AffineDepthParams& params, double noise_std,
                            double outlier_frac, uint64_t seed) {
  if (params.space != ParamSpace::kDisparity) {
    throw InvalidArgumentError("synth disparity: params must be disparity-space");
  }
  if (!std::isfinite(params.scale) || params.scale == 0.0 ||
      !std::isfinite(params.shift)) {
    throw InvalidArgumentError("synth disparity: scale must be finite, nonzero");
  }
  if (!(noise_std >= 0.0) || !(outlier_frac >= 0.0 && outlier_frac <= 1.0)) {
    throw InvalidArgumentError(
        "synth disparity: need noise_std >= 0 and outlier_frac in [0, 1]");
  }
  const int width = ground_truth.width();
  const int height = ground_truth.height();
  DisparityMap disparity(width, height);

  std::vector<size_t> valid_pixels;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  Raster<double> clean(width, height);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      if (!ground_truth.IsValid(u, v)) continue;
      const double d = (1.0 / ground_truth.Value(u, v) - params.shift) /
                       params.scale;
      clean(u, v) = d;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      valid_pixels.push_back(static_cast<size_t>(v) * width + u);
    }
  }
  if (valid_pixels.empty()) return disparity;

  // Background disparity: the value of the farthest ground-truth depth.
  double farthest_depth = 0.0;
  double background = lo;
  for (size_t index : valid_pixels) {
    const int u = static_cast<int>(index % width);
    const int v = static_cast<int>(index / width);
    if (ground_truth.Value(u, v) > farthest_depth) {
      farthest_depth = ground_truth.Value(u, v);
      background = clean(u, v);
    }
  }

  Rng rng(seed);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      double d = ground_truth.IsValid(u, v) ? clean(u, v) : background;
      if (noise_std > 0.0) d += noise_std * rng.Normal();
      disparity.Set(u, v, d);
    }
  }

  const size_t n_outliers = static_cast<size_t>(
      std::llround(outlier_frac * static_cast<double>(valid_pixels.size())));
  // Partial Fisher-Yates over the valid pixels picks the outlier set.
  for (size_t i = 0; i < n_outliers; ++i) {
    const size_t j = i + rng.UniformInt(valid_pixels.size() - i);
    std::swap(valid_pixels[i], valid_pixels[j]);
    const int u = static_cast<int>(valid_pixels[i] % width);
    const int v = static_cast<int>(valid_pixels[i] / width);
    disparity.Set(u, v, rng.Uniform(lo, hi));
  }
  return disparity;
}

namespace {

using nlohmann::json;

void CheckKeys(const json& object, const std::string& path,
               std::initializer_list<const char*> allowed) {
  if (!object.is_object()) {
    throw ParseError((path.empty() ? "scene" : path) + ": expected an object");
  }
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) {
      throw ParseError((path.empty() ? "" : path + ".") + item.key() +
                       ": unknown field");
    }
  }
}

double GetNumber(const json& value, const std::string& path) {
  if (!value.is_number()) throw ParseError(path + ": expected a number");
  return value.get<double>();
}

Eigen::Vector3d GetVector3(const json& value, const std::string& path) {
  if (!value.is_array() || value.size() != 3) {
    throw ParseError(path + ": expected [x, y, z]");
  }
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    out[c] = GetNumber(value[c], path + "[" + std::to_string(c) + "]");
  }
  return out;
}

json Vector3ToJson(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

SceneSpec SceneSpecFromJson(const json& j) {
  CheckKeys(j, "", {"intrinsics", "ground", "animals", "n_frames", "seed",
                    "max_depth_m", "dropout_frac"});
  SceneSpec spec;
  if (!j.contains("intrinsics")) throw ParseError("intrinsics: required");
  spec.intrinsics = IntrinsicsFromJson(j.at("intrinsics"));
  if (j.contains("ground")) {
    const json& ground = j.at("ground");
    CheckKeys(ground, "ground", {"height_m", "tilt_deg"});
    if (ground.contains("height_m")) {
      spec.ground_height_m = GetNumber(ground.at("height_m"), "ground.height_m");
    }
    if (ground.contains("tilt_deg")) {
      spec.ground_tilt_deg = GetNumber(ground.at("tilt_deg"), "ground.tilt_deg");
    }
  }
  if (j.contains("n_frames")) {
    const json& n = j.at("n_frames");
    if (!n.is_number_integer()) throw ParseError("n_frames: expected an integer");
    spec.n_frames = n.get<int>();
  }
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned()) {
      throw ParseError("seed: expected a nonnegative integer");
    }
    spec.seed = s.get<uint64_t>();
  }
  if (j.contains("max_depth_m")) {
    spec.max_depth_m = GetNumber(j.at("max_depth_m"), "max_depth_m");
  }
  if (j.contains("dropout_frac")) {
    spec.dropout_frac = GetNumber(j.at("dropout_frac"), "dropout_frac");
  }
  if (j.contains("animals")) {
    const json& animals = j.at("animals");
    if (!animals.is_array()) throw ParseError("animals: expected an array");
    for (size_t i = 0; i < animals.size(); ++i) {
      const std::string path = "animals[" + std::to_string(i) + "]";
      const json& a = animals[i];
      CheckKeys(a, path, {"size_m", "position", "velocity"});
      AnimalSpec animal;
      if (!a.contains("size_m")) throw ParseError(path + ".size_m: required");
      const json& size = a.at("size_m");
      if (!size.is_array() || size.size() != 2) {
        throw ParseError(path + ".size_m: expected [width, height]");
      }
      animal.width_m = GetNumber(size[0], path + ".size_m[0]");
      animal.height_m = GetNumber(size[1], path + ".size_m[1]");
      if (!a.contains("position")) {
        throw ParseError(path + ".position: required");
      }
      animal.position = GetVector3(a.at("position"), path + ".position");
      if (a.contains("velocity")) {
        animal.velocity = GetVector3(a.at("velocity"), path + ".velocity");
      }
      spec.animals.push_back(animal);
    }
  }
  spec.Validate();
  return spec;
}

json SceneSpecToJson(const SceneSpec& spec) {
  json animals = json::array();
  for (const AnimalSpec& a : spec.animals) {
    animals.push_back({{"size_m", {a.width_m, a.height_m}},
                       {"position", Vector3ToJson(a.position)},
                       {"velocity", Vector3ToJson(a.velocity)}});
  }
  return {{"intrinsics", IntrinsicsToJson(spec.intrinsics)},
          {"ground",
           {{"height_m", spec.ground_height_m},
            {"tilt_deg", spec.ground_tilt_deg}}},
          {"animals", animals},
          {"n_frames", spec.n_frames},
          {"seed", spec.seed},
          {"max_depth_m", spec.max_depth_m},
          {"dropout_frac", spec.dropout_frac}};
}

}  // namespace camdist
