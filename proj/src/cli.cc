#include "camdist/cli.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "camdist/alignment.h"
#include "camdist/camera.h"
#include "camdist/error.h"
#include "camdist/evaluation.h"
#include "camdist/formats.h"
#include "camdist/image_io.h"
#include "camdist/instances.h"
#include "camdist/pipeline.h"
#include "camdist/point_cloud.h"
#include "camdist/rng.h"
#include "camdist/synth.h"
#include "json.hpp"

namespace camdist {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Bad invocation or configuration; maps to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --------------------------------------------------------------------------
// Config files

void FlattenConfig(const json& node, const std::string& prefix,
                   std::vector<std::string>& tokens) {
  if (node.is_object()) {
    for (const auto& item : node.items()) {
      FlattenConfig(item.value(),
                    prefix.empty() ? item.key() : prefix + "." + item.key(),
                    tokens);
    }
    return;
  }
  if (prefix.empty()) throw UsageError("config: top level must be an object");
  if (node.is_array()) {
    for (const json& element : node) {
      if (element.is_structured()) {
        throw UsageError("config: " + prefix + ": nested arrays not supported");
      }
      FlattenConfig(element, prefix, tokens);
    }
    return;
  }
  std::string value;
  if (node.is_string()) {
    value = node.get<std::string>();
  } else if (node.is_boolean()) {
    value = node.get<bool>() ? "true" : "false";
  } else if (node.is_number()) {
    value = node.dump();
  } else {
    throw UsageError("config: " + prefix + ": null is not a value");
  }
  tokens.push_back("--" + prefix + "=" + value);
}

// Inserts the options of a --config document right after the subcommand
// name, so flags given explicitly on the command line take precedence.
std::vector<std::string> ExpandConfig(const std::vector<std::string>& args) {
  if (args.empty() || args[0].starts_with("-")) return args;
  std::optional<std::string> config_path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      config_path = args[i + 1];
    } else if (args[i].starts_with("--config=")) {
      config_path = args[i].substr(9);
    }
  }
  if (!config_path) return args;
  json document;
  try {
    document = json::parse(ReadTextFile(*config_path));
  } catch (const IoError& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const json::exception& e) {
    throw UsageError("config " + *config_path + ": " + e.what());
  }
  if (!document.is_object()) throw UsageError("config: expected an object");
  std::vector<std::string> tokens;
  FlattenConfig(document, "", tokens);
  std::vector<std::string> expanded{args[0]};
  expanded.insert(expanded.end(), tokens.begin(), tokens.end());
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

// --------------------------------------------------------------------------
// Files and frames

void RequireDirectory(const std::string& path, const std::string& what) {
  if (!fs::is_directory(path)) {
    throw UsageError(what + ": '" + path + "' is not a directory");
  }
}

void RequireFile(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    throw UsageError(what + ": '" + path + "' is not a file");
  }
}

// stem -> path for files with the given extension, ordered by stem.
std::map<std::string, fs::path> ListFrames(const std::string& dir,
                                           const std::string& extension) {
  std::map<std::string, fs::path> frames;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != extension) {
      continue;
    }
    frames[entry.path().stem().string()] = entry.path();
  }
  return frames;
}

template <typename A, typename B>
void CheckSameStems(const std::map<std::string, A>& a, const std::string& a_name,
                    const std::map<std::string, B>& b,
                    const std::string& b_name) {
  for (const auto& [stem, unused] : a) {
    if (!b.contains(stem)) {
      throw UsageError("frame '" + stem + "' is in " + a_name + " but not in " +
                       b_name);
    }
  }
  for (const auto& [stem, unused] : b) {
    if (!a.contains(stem)) {
      throw UsageError("frame '" + stem + "' is in " + b_name + " but not in " +
                       a_name);
    }
  }
}

void CreateDirectories(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string FrameStem(int frame) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "frame_%06d", frame);
  return buffer;
}

fs::path AttentionPath(const fs::path& dir, const std::string& stem,
                       int det_index) {
  return dir / (stem + "_" + std::to_string(det_index) + ".pfm");
}

void WriteJsonFile(const fs::path& path, const json& document) {
  WriteTextFile(path, document.dump(2) + "\n");
}

// --------------------------------------------------------------------------
// Frame-parallel execution

struct FrameRun {
  std::vector<std::optional<std::string>> errors;
  bool failed() const {
    return std::any_of(errors.begin(), errors.end(),
                       [](const auto& e) { return e.has_value(); });
  }
};

// Runs task(i) over frames with up to `jobs` workers. Without keep_going no
// new frame starts once one has failed.
FrameRun RunFrames(size_t n, int jobs, bool keep_going,
                   const std::function<void(size_t)>& task) {
  FrameRun run;
  run.errors.resize(n);
  std::atomic<size_t> next{0};
  std::atomic<bool> stop{false};
  const auto worker = [&] {
    while (!stop.load()) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (const std::exception& e) {
        run.errors[i] = e.what();
        if (!keep_going) stop.store(true);
      }
    }
  };
  const size_t workers =
      std::min<size_t>(static_cast<size_t>(std::max(1, jobs)), n);
  if (workers <= 1) {
    worker();
    return run;
  }
  std::vector<std::thread> threads;
  for (size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (std::thread& thread : threads) thread.join();
  return run;
}

int ReportFrameErrors(const FrameRun& run,
                      const std::vector<std::string>& stems,
                      std::ostream& err) {
  int failures = 0;
  for (size_t i = 0; i < run.errors.size(); ++i) {
    if (!run.errors[i]) continue;
    err << "error: frame " << stems[i] << ": " << *run.errors[i] << "\n";
    ++failures;
  }
  return failures;
}

// --------------------------------------------------------------------------
// Shared option groups

struct RunOptions {
  std::string config;
  bool keep_going = false;
  int jobs = 1;
};

void AddRunOptions(CLI::App* sub, RunOptions& o, bool parallel) {
  sub->add_option("--config", o.config,
                  "JSON document of option values keyed by option name");
  sub->add_flag("--keep-going", o.keep_going,
                "Process remaining frames after a failure (exit status stays 1)");
  if (parallel) {
    sub->add_option("--jobs", o.jobs, "Frame-parallel workers")
        ->check(CLI::PositiveNumber);
  }
}

struct IntrinsicsOptions {
  std::string file;
  double focal = 0.0;
  double hfov = 0.0;
  int width = 0;
  int height = 0;
  std::vector<double> principal_point;
  CLI::Option* file_opt = nullptr;
  CLI::Option* focal_opt = nullptr;
  CLI::Option* hfov_opt = nullptr;
  CLI::Option* width_opt = nullptr;
  CLI::Option* height_opt = nullptr;
  CLI::Option* pp_opt = nullptr;
};

void AddIntrinsicsOptions(CLI::App* sub, IntrinsicsOptions& o) {
  o.file_opt = sub->add_option("--intrinsics", o.file, "Intrinsics JSON file");
  o.focal_opt = sub->add_option("--focal", o.focal, "Focal length in pixels");
  o.hfov_opt =
      sub->add_option("--hfov", o.hfov, "Horizontal field of view, degrees");
  o.width_opt = sub->add_option("--width", o.width, "Image width in pixels");
  o.height_opt = sub->add_option("--height", o.height, "Image height in pixels");
  o.pp_opt = sub->add_option("--principal-point", o.principal_point,
                             "Principal point u0 v0")
                 ->expected(2)
                 ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

std::optional<ImageSize> ExplicitSize(const IntrinsicsOptions& o) {
  if (o.width_opt->count() == 0 && o.height_opt->count() == 0) {
    return std::nullopt;
  }
  if (o.width_opt->count() == 0 || o.height_opt->count() == 0) {
    throw UsageError("--width and --height go together");
  }
  return ImageSize{o.width, o.height};
}

// At most one of --intrinsics, --focal, --hfov. The image size comes from
// --width/--height, else from `fallback` (typically the first raster).
std::optional<CameraIntrinsics> ResolveIntrinsics(
    const IntrinsicsOptions& o, std::optional<ImageSize> fallback,
    std::ostream& err) {
  const int sources = static_cast<int>(o.file_opt->count() > 0) +
                      static_cast<int>(o.focal_opt->count() > 0) +
                      static_cast<int>(o.hfov_opt->count() > 0);
  if (sources > 1) {
    throw UsageError("give exactly one of --intrinsics, --focal, --hfov");
  }
  if (sources == 0) return std::nullopt;
  CameraIntrinsics intrinsics;
  try {
    if (o.file_opt->count() > 0) {
      RequireFile(o.file, "--intrinsics");
      intrinsics = IntrinsicsFromJson(json::parse(ReadTextFile(o.file)));
    } else {
      std::optional<ImageSize> size = ExplicitSize(o);
      if (!size) size = fallback;
      if (!size) {
        throw UsageError("--focal/--hfov need --width and --height here");
      }
      std::optional<Eigen::Vector2d> pp;
      if (o.pp_opt->count() > 0) {
        pp = Eigen::Vector2d(o.principal_point[0], o.principal_point[1]);
      }
      intrinsics = o.focal_opt->count() > 0
                       ? CameraIntrinsics::FromFocal(size->width, size->height,
                                                     o.focal, pp)
                       : CameraIntrinsics::FromFov(size->width, size->height,
                                                   o.hfov, pp);
    }
    intrinsics.Validate();
  } catch (const Error& e) {
    throw UsageError(std::string("intrinsics: ") + e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("intrinsics: ") + e.what());
  }
  if (intrinsics.FovDiscrepancy() > 1e-9) {
    err << "warning: focal length " << intrinsics.focal_px
        << " px differs from the field of view by "
        << intrinsics.FovDiscrepancy() * 100.0 << "%; using the focal length\n";
  }
  return intrinsics;
}

ImageSize ResolveImageSize(const IntrinsicsOptions& o, std::ostream& err) {
  if (const auto size = ExplicitSize(o)) return *size;
  if (const auto intrinsics = ResolveIntrinsics(o, std::nullopt, err)) {
    return intrinsics->size();
  }
  throw UsageError("image size needed: give --width/--height or intrinsics");
}

struct RansacOptions {
  int iterations = RansacConfig{}.iterations;
  double threshold = 0.0;
  uint64_t seed = 0;
  size_t max_points = RansacConfig{}.max_points;
  CLI::Option* threshold_opt = nullptr;
};

void AddRansacOptions(CLI::App* sub, RansacOptions& o) {
  sub->add_option("--ransac.iterations", o.iterations, "RANSAC iterations");
  o.threshold_opt = sub->add_option(
      "--ransac.threshold", o.threshold,
      "Inlier threshold (default: derived from a least-squares fit)");
  sub->add_option("--ransac.seed", o.seed, "RANSAC seed");
  sub->add_option("--ransac.max-points", o.max_points,
                  "Subsample size for large frames");
}

RansacConfig ToRansacConfig(const RansacOptions& o) {
  RansacConfig config;
  config.iterations = o.iterations;
  if (o.threshold_opt->count() > 0) config.inlier_threshold = o.threshold;
  config.seed = o.seed;
  config.max_points = o.max_points;
  try {
    config.Validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return config;
}

struct AssociationOptions {
  AssociationConfig config;
};

void AddAssociationOptions(CLI::App* sub, AssociationOptions& o) {
  AssociationConfig& c = o.config;
  sub->add_option("--association.alpha", c.alpha,
                  "Weight of IoU against depth similarity");
  sub->add_option("--association.dist-max", c.dist_max,
                  "Depth difference (m) at which depth similarity reaches 0");
  sub->add_option("--association.sim-threshold", c.sim_threshold,
                  "Minimum similarity for a match");
  sub->add_option("--association.max-age", c.max_age,
                  "Frames a track may coast unmatched");
  sub->add_option("--association.min-hits", c.min_hits,
                  "Matches before a track is reported");
  sub->add_option("--association.use-depth", c.use_depth,
                  "Track depth in the filter state (true/false)");
  sub->add_option("--association.depth-std", c.depth_measurement_std,
                  "Depth measurement standard deviation, m");
}

AssociationConfig ToAssociationConfig(const AssociationOptions& o) {
  try {
    o.config.Validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return o.config;
}

// --------------------------------------------------------------------------
// align

struct AlignOptions {
  RunOptions run;
  IntrinsicsOptions intrinsics;
  RansacOptions ransac;
  std::string disparity;
  std::string depth_gt;
  std::string out;
  std::string aligner = "ransac";
  std::string calibration_file;
  double calibration_scale = 1.0;
  double calibration_shift = 0.0;
  double fixed_scale = 1.0;
  double fixed_shift = 0.0;
  bool ply = false;
  CLI::Option* depth_gt_opt = nullptr;
  CLI::Option* calibration_file_opt = nullptr;
  CLI::Option* calibration_scale_opt = nullptr;
  CLI::Option* calibration_shift_opt = nullptr;
  CLI::Option* fixed_scale_opt = nullptr;
  CLI::Option* fixed_shift_opt = nullptr;
};

void AddAlign(CLI::App& app, AlignOptions& o) {
  CLI::App* sub = app.add_subcommand(
      "align", "Turn relative disparity into metric depth (PNG16, mm)");
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  AddRunOptions(sub, o.run, true);
  sub->add_option("--disparity", o.disparity, "Directory of disparity PFMs")
      ->required();
  o.depth_gt_opt = sub->add_option("--depth-gt", o.depth_gt,
                                   "Directory of ground-truth depth PNG16s");
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--aligner", o.aligner,
                  "ransac | ransac-depth | fixed | global");
  o.calibration_file_opt = sub->add_option(
      "--calibration", o.calibration_file,
      "Global calibration JSON, or a params.json from an earlier run");
  o.calibration_scale_opt = sub->add_option(
      "--calibration.scale", o.calibration_scale, "Global disparity scale");
  o.calibration_shift_opt = sub->add_option(
      "--calibration.shift", o.calibration_shift, "Global disparity shift");
  o.fixed_scale_opt =
      sub->add_option("--fixed.scale", o.fixed_scale, "Depth-space scale");
  o.fixed_shift_opt =
      sub->add_option("--fixed.shift", o.fixed_shift, "Depth-space shift");
  sub->add_flag("--ply", o.ply, "Also write an ASCII PLY point cloud per frame");
  AddIntrinsicsOptions(sub, o.intrinsics);
  AddRansacOptions(sub, o.ransac);
}

std::optional<GlobalCalibration> ExplicitCalibration(const AlignOptions& o) {
  const bool inline_given = o.calibration_scale_opt->count() > 0 ||
                            o.calibration_shift_opt->count() > 0;
  if (inline_given && o.calibration_file_opt->count() > 0) {
    throw UsageError("give --calibration or --calibration.scale/shift, not both");
  }
  if (inline_given) {
    if (o.calibration_scale_opt->count() == 0 ||
        o.calibration_shift_opt->count() == 0) {
      throw UsageError("--calibration.scale and --calibration.shift go together");
    }
    return GlobalCalibration{o.calibration_scale, o.calibration_shift, 1};
  }
  if (o.calibration_file_opt->count() == 0) return std::nullopt;
  RequireFile(o.calibration_file, "--calibration");
  try {
    const json j = json::parse(ReadTextFile(o.calibration_file));
    if (j.contains("calibration")) {
      if (j.at("calibration").is_null()) {
        throw UsageError("--calibration: file holds no calibration");
      }
      return GlobalCalibrationFromJson(j.at("calibration"));
    }
    return GlobalCalibrationFromJson(j);
  } catch (const json::exception& e) {
    throw UsageError(std::string("--calibration: ") + e.what());
  } catch (const Error& e) {
    throw UsageError(std::string("--calibration: ") + e.what());
  }
}

int CmdAlign(const AlignOptions& o, std::ostream& out, std::ostream& err) {
  RequireDirectory(o.disparity, "--disparity");
  const auto disparity_files = ListFrames(o.disparity, ".pfm");
  if (disparity_files.empty()) {
    throw UsageError("--disparity: no .pfm files in " + o.disparity);
  }
  std::map<std::string, fs::path> gt_files;
  const bool has_gt = o.depth_gt_opt->count() > 0;
  if (has_gt) {
    RequireDirectory(o.depth_gt, "--depth-gt");
    gt_files = ListFrames(o.depth_gt, ".png");
    CheckSameStems(disparity_files, "--disparity", gt_files, "--depth-gt");
  }

  AlignerChoice choice;
  try {
    choice.kind = AlignerKindFromName(o.aligner);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  choice.ransac = ToRansacConfig(o.ransac);
  if (choice.NeedsGroundTruth() && !has_gt) {
    throw UsageError("aligner '" + o.aligner + "' needs --depth-gt");
  }
  if (choice.kind == AlignerKind::kFixed) {
    if (o.fixed_scale_opt->count() == 0 || o.fixed_shift_opt->count() == 0) {
      throw UsageError("aligner 'fixed' needs --fixed.scale and --fixed.shift");
    }
    if (!(o.fixed_scale > 0.0)) throw UsageError("--fixed.scale must be > 0");
    choice.fixed = {o.fixed_scale, o.fixed_shift, ParamSpace::kDepth};
  }

  std::vector<std::string> stems;
  for (const auto& [stem, unused] : disparity_files) stems.push_back(stem);
  const size_t n = stems.size();

  std::optional<CameraIntrinsics> intrinsics;
  if (o.ply) {
    const DisparityMap first = ReadDisparityPfm(disparity_files.begin()->second);
    intrinsics = ResolveIntrinsics(o.intrinsics, first.size(), err);
    if (!intrinsics) throw UsageError("--ply needs camera intrinsics");
  }

  std::optional<GlobalCalibration> calibration = ExplicitCalibration(o);
  if (choice.kind != AlignerKind::kRansac) {
    if (!calibration) {
      if (!has_gt) {
        throw UsageError("aligner '" + o.aligner +
                         "' needs a global calibration or --depth-gt");
      }
      // Fit the calibration on the ground-truth frames themselves.
      std::vector<DisparityMap> disparity(n);
      std::vector<DepthMap> gt(n);
      std::vector<CalibrationFrame> frames(n);
      for (size_t i = 0; i < n; ++i) {
        disparity[i] = ReadDisparityPfm(disparity_files.at(stems[i]));
        gt[i] = ReadDepthPng16(gt_files.at(stems[i]), DepthKind::kGroundTruth);
        frames[i] = {&disparity[i], &gt[i]};
      }
      calibration = FitGlobalCalibration(frames, choice.ransac);
    }
    choice.calibration = *calibration;
  }

  const fs::path out_dir(o.out);
  CreateDirectories(out_dir / "metric_depth");
  if (o.ply) CreateDirectories(out_dir / "pointcloud");

  std::vector<std::optional<AffineDepthParams>> params(n);
  const FrameRun run =
      RunFrames(n, o.run.jobs, o.run.keep_going, [&](size_t i) {
        const std::string& stem = stems[i];
        const DisparityMap disparity =
            ReadDisparityPfm(disparity_files.at(stem));
        std::optional<DepthMap> gt;
        if (has_gt) {
          gt = ReadDepthPng16(gt_files.at(stem), DepthKind::kGroundTruth);
        }
        const FrameAlignment aligned =
            AlignFrame(disparity, gt ? &*gt : nullptr, choice);
        WriteDepthPng16(out_dir / "metric_depth" / (stem + ".png"),
                        aligned.metric);
        if (o.ply) {
          const PointCloud cloud =
              Unproject(QuantizeToMillimeters(aligned.metric), *intrinsics);
          WritePlyAscii(cloud, out_dir / "pointcloud" / (stem + ".ply"));
        }
        params[i] = aligned.params;
      });

  json frames = json::array();
  std::vector<AffineDepthParams> disparity_fits;
  for (size_t i = 0; i < n; ++i) {
    json entry = {{"stem", stems[i]}};
    entry["status"] = run.errors[i] ? "error" : "ok";
    entry["params"] = params[i] ? ToJson(*params[i]) : json(nullptr);
    frames.push_back(entry);
    if (choice.kind == AlignerKind::kRansac && params[i]) {
      disparity_fits.push_back(*params[i]);
    }
  }
  json document = {{"aligner", AlignerKindName(choice.kind)},
                   {"frames", frames}};
  if (choice.kind == AlignerKind::kRansac) {
    document["calibration"] = disparity_fits.empty()
                                  ? json(nullptr)
                                  : ToJson(AverageDisparityFits(disparity_fits));
  } else {
    document["calibration"] = ToJson(choice.calibration);
  }
  WriteJsonFile(out_dir / "params.json", document);

  const int failures = ReportFrameErrors(run, stems, err);
  out << "aligned " << (n - failures) << "/" << n << " frames\n";
  return failures > 0 ? kExitFailure : kExitOk;
}

// --------------------------------------------------------------------------
// distances

struct DistancesOptions {
  RunOptions run;
  std::string depth;
  std::string detections;
  std::string attention;
  std::string out;
  double confidence_floor = DetectionIngestOptions{}.confidence_floor;
  CLI::Option* attention_opt = nullptr;
};

void AddDistances(CLI::App& app, DistancesOptions& o) {
  CLI::App* sub = app.add_subcommand(
      "distances", "Median metric distance per detected animal (CSV)");
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  AddRunOptions(sub, o.run, true);
  sub->add_option("--depth", o.depth, "Directory of metric depth PNG16s")
      ->required();
  sub->add_option("--detections", o.detections, "Detection JSON file")
      ->required();
  o.attention_opt = sub->add_option(
      "--attention", o.attention,
      "Directory of attention PFMs named <stem>_<det_index>.pfm");
  sub->add_option("--out", o.out, "Output CSV path")->required();
  sub->add_option("--ingest.confidence-floor", o.confidence_floor,
                  "Drop detections below this confidence");
}

std::vector<ImageDetections> LoadDetections(const std::string& path,
                                            double confidence_floor) {
  RequireFile(path, "--detections");
  return IngestDetections(path, {confidence_floor});
}

int CmdDistances(const DistancesOptions& o, std::ostream& out,
                 std::ostream& err) {
  RequireDirectory(o.depth, "--depth");
  const bool has_attention = o.attention_opt->count() > 0;
  if (has_attention) RequireDirectory(o.attention, "--attention");
  const auto depth_files = ListFrames(o.depth, ".png");
  const std::vector<ImageDetections> images =
      LoadDetections(o.detections, o.confidence_floor);
  std::map<std::string, const ImageDetections*> by_stem;
  for (const ImageDetections& image : images) by_stem[image.stem] = &image;
  CheckSameStems(depth_files, "--depth", by_stem, "--detections");

  const size_t n = images.size();
  std::vector<std::string> stems;
  for (const ImageDetections& image : images) stems.push_back(image.stem);
  std::vector<std::vector<DistanceRecord>> rows(n);
  std::optional<ImageSize> image_size;
  std::mutex size_mutex;
  const fs::path attention_dir(o.attention);

  const FrameRun run =
      RunFrames(n, o.run.jobs, o.run.keep_going, [&](size_t i) {
        const ImageDetections& frame = images[i];
        const DepthMap depth =
            ReadDepthPng16(depth_files.at(frame.stem), DepthKind::kMetric);
        {
          std::lock_guard<std::mutex> lock(size_mutex);
          if (!image_size) image_size = depth.size();
          if (depth.size() != *image_size) {
            throw DimensionMismatchError("depth raster size differs from "
                                         "other frames");
          }
        }
        AttentionLookup lookup;
        if (has_attention) {
          lookup = [&](const Detection& det) -> std::optional<AttentionMap> {
            const fs::path path =
                AttentionPath(attention_dir, frame.stem, det.det_index);
            if (!fs::is_regular_file(path)) return std::nullopt;
            return AttentionMap{ReadPfmRaster(path),
                                ExpandBbox(det, depth.size())};
          };
        }
        FrameDistanceResult result =
            ComputeFrameDistances(depth, frame, lookup, depth.size());
        if (!result.errors.empty()) {
          std::string message = result.errors[0];
          for (size_t k = 1; k < result.errors.size(); ++k) {
            message += "; " + result.errors[k];
          }
          // Keep the rows that did work when continuing past failures.
          rows[i] = std::move(result.rows);
          throw InsufficientDataError(message);
        }
        rows[i] = std::move(result.rows);
      });

  std::vector<DistanceRecord> all;
  for (size_t i = 0; i < n; ++i) {
    if (run.errors[i] && !o.run.keep_going) continue;
    all.insert(all.end(), rows[i].begin(), rows[i].end());
  }
  const int failures = ReportFrameErrors(run, stems, err);
  if (failures == 0 || o.run.keep_going) WriteDistancesCsv(o.out, all);
  out << "wrote " << all.size() << " distances from " << n << " frames\n";
  return failures > 0 ? kExitFailure : kExitOk;
}

// --------------------------------------------------------------------------
// track

struct TrackOptions {
  RunOptions run;
  IntrinsicsOptions intrinsics;
  AssociationOptions association;
  std::string distances;
  std::string detections;
  std::string out;
  double confidence_floor = DetectionIngestOptions{}.confidence_floor;
};

void AddTrack(CLI::App& app, TrackOptions& o) {
  CLI::App* sub =
      app.add_subcommand("track", "Depth-aware multi-object tracking (JSONL)");
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  AddRunOptions(sub, o.run, false);
  sub->add_option("--distances", o.distances, "Distances CSV")->required();
  sub->add_option("--detections", o.detections, "Detection JSON file")
      ->required();
  sub->add_option("--out", o.out, "Output JSONL path")->required();
  sub->add_option("--ingest.confidence-floor", o.confidence_floor,
                  "Drop detections below this confidence");
  AddIntrinsicsOptions(sub, o.intrinsics);
  AddAssociationOptions(sub, o.association);
}

int CmdTrack(const TrackOptions& o, std::ostream& out, std::ostream& err) {
  RequireFile(o.distances, "--distances");
  const ImageSize image = ResolveImageSize(o.intrinsics, err);
  const AssociationConfig config = ToAssociationConfig(o.association);
  const std::vector<ImageDetections> images =
      LoadDetections(o.detections, o.confidence_floor);
  const std::vector<DistanceRecord> distances = ReadDistancesCsv(o.distances);
  const std::vector<TrackOutput> tracks =
      TrackSequence(images, distances, image, config);
  WriteTracksJsonl(o.out, tracks);
  std::set<int> ids;
  for (const TrackOutput& t : tracks) ids.insert(t.track_id);
  out << "wrote " << tracks.size() << " track rows, " << ids.size()
      << " tracks\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// eval-depth

struct EvalDepthOptions {
  RunOptions run;
  std::vector<std::string> scenes;
  std::string pred;
  std::string gt;
  std::string pred_instances;
  std::string gt_instances;
  double cap = kDefaultDepthCapM;
  std::string out;
  std::string csv;
  std::string plot;
  CLI::Option* pred_opt = nullptr;
  CLI::Option* gt_opt = nullptr;
  CLI::Option* pred_instances_opt = nullptr;
  CLI::Option* gt_instances_opt = nullptr;
};

void AddEvalDepth(CLI::App& app, EvalDepthOptions& o) {
  CLI::App* sub = app.add_subcommand(
      "eval-depth", "Pixel and instance depth error metrics");
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  AddRunOptions(sub, o.run, false);
  sub->add_option("--scene", o.scenes,
                  "name=pred_dir,gt_dir[,pred_csv,gt_csv]; repeatable")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  o.pred_opt = sub->add_option("--pred", o.pred, "Predicted depth PNG16 dir");
  o.gt_opt = sub->add_option("--gt", o.gt, "Ground-truth depth PNG16 dir");
  o.pred_instances_opt = sub->add_option("--pred-instances", o.pred_instances,
                                         "Predicted distances CSV");
  o.gt_instances_opt = sub->add_option("--gt-instances", o.gt_instances,
                                       "Ground-truth distances CSV");
  sub->add_option("--cap", o.cap, "Only ground truth below this depth (m)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "Report JSON path (default: stdout)");
  sub->add_option("--csv", o.csv, "Per-scene metrics CSV path");
  sub->add_option("--plot", o.plot,
                  "Per-scene quartiles of instance absolute errors (CSV)");
}

struct SceneInputs {
  std::string name;
  std::string pred_dir;
  std::string gt_dir;
  std::string pred_csv;
  std::string gt_csv;
};

SceneInputs ParseSceneArgument(const std::string& text) {
  const size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw UsageError("--scene '" + text + "': expected name=pred,gt[,pcsv,gcsv]");
  }
  std::vector<std::string> parts;
  std::stringstream rest(text.substr(eq + 1));
  std::string part;
  while (std::getline(rest, part, ',')) parts.push_back(part);
  if (parts.size() != 2 && parts.size() != 4) {
    throw UsageError("--scene '" + text + "': expected 2 or 4 paths");
  }
  SceneInputs scene{text.substr(0, eq), parts[0], parts[1], "", ""};
  if (parts.size() == 4) {
    scene.pred_csv = parts[2];
    scene.gt_csv = parts[3];
  }
  return scene;
}

std::vector<InstanceValue> LoadInstances(const std::string& path) {
  std::vector<InstanceValue> values;
  for (const DistanceRecord& r : ReadDistancesCsv(path)) {
    values.push_back({std::to_string(r.frame_id) + ":" +
                          std::to_string(r.det_index),
                      r.distance_m});
  }
  return values;
}

struct PixelPairs {
  std::vector<double> pred;
  std::vector<double> gt;
};

void CollectPixels(const std::string& pred_dir, const std::string& gt_dir,
                   double cap, PixelPairs& pairs) {
  const auto pred_files = ListFrames(pred_dir, ".png");
  const auto gt_files = ListFrames(gt_dir, ".png");
  CheckSameStems(pred_files, pred_dir, gt_files, gt_dir);
  for (const auto& [stem, pred_path] : pred_files) {
    const DepthMap pred = ReadDepthPng16(pred_path, DepthKind::kMetric);
    const DepthMap gt =
        ReadDepthPng16(gt_files.at(stem), DepthKind::kGroundTruth);
    if (pred.size() != gt.size()) {
      throw DimensionMismatchError("frame " + stem +
                                   ": prediction and ground truth differ in "
                                   "size");
    }
    for (int v = 0; v < gt.height(); ++v) {
      for (int u = 0; u < gt.width(); ++u) {
        if (!pred.IsValid(u, v) || !gt.IsValid(u, v)) continue;
        if (!(gt.Value(u, v) < cap)) continue;
        pairs.pred.push_back(pred.Value(u, v));
        pairs.gt.push_back(gt.Value(u, v));
      }
    }
  }
}

const char* kSceneCsvHeader = "scene,level,rms,rel,mae,me,n_valid";

std::string SceneCsvRow(const std::string& scene, const char* level,
                        const DepthReport& r) {
  return scene + "," + level + "," + FormatDouble(r.rms) + "," +
         FormatDouble(r.rel) + "," + FormatDouble(r.mae) + "," +
         FormatDouble(r.me) + "," + std::to_string(r.n_valid) + "\n";
}

int CmdEvalDepth(const EvalDepthOptions& o, std::ostream& out,
                 std::ostream& err) {
  std::vector<SceneInputs> scenes;
  for (const std::string& text : o.scenes) scenes.push_back(ParseSceneArgument(text));
  const bool single = o.pred_opt->count() > 0 || o.gt_opt->count() > 0 ||
                      o.pred_instances_opt->count() > 0 ||
                      o.gt_instances_opt->count() > 0;
  if (single) {
    if ((o.pred_opt->count() > 0) != (o.gt_opt->count() > 0)) {
      throw UsageError("--pred and --gt go together");
    }
    if ((o.pred_instances_opt->count() > 0) !=
        (o.gt_instances_opt->count() > 0)) {
      throw UsageError("--pred-instances and --gt-instances go together");
    }
    scenes.push_back({"default", o.pred, o.gt, o.pred_instances, o.gt_instances});
  }
  if (scenes.empty()) throw UsageError("nothing to evaluate: give --scene or --pred/--gt");
  std::set<std::string> names;
  for (const SceneInputs& s : scenes) {
    if (!names.insert(s.name).second) {
      throw UsageError("duplicate scene name '" + s.name + "'");
    }
    if (!s.pred_dir.empty() || !s.gt_dir.empty()) {
      RequireDirectory(s.pred_dir, "scene " + s.name + " prediction");
      RequireDirectory(s.gt_dir, "scene " + s.name + " ground truth");
    }
    if (!s.pred_csv.empty()) {
      RequireFile(s.pred_csv, "scene " + s.name + " prediction CSV");
      RequireFile(s.gt_csv, "scene " + s.name + " ground-truth CSV");
    }
  }

  json report = {{"cap_m", o.cap}, {"scenes", json::object()}};
  std::string csv = std::string(kSceneCsvHeader) + "\n";
  std::string plot = "scene,min,q1,median,q3,max,n\n";
  int failures = 0;
  PixelPairs all_pixels;
  std::vector<double> all_instance_pred, all_instance_gt;
  for (const SceneInputs& s : scenes) {
    try {
      json entry = json::object();
      if (!s.pred_dir.empty()) {
        PixelPairs pixels;
        CollectPixels(s.pred_dir, s.gt_dir, o.cap, pixels);
        const DepthReport r = ComputeErrorMetrics(pixels.pred, pixels.gt);
        entry["pixel"] = ToJson(r);
        csv += SceneCsvRow(s.name, "pixel", r);
        all_pixels.pred.insert(all_pixels.pred.end(), pixels.pred.begin(),
                               pixels.pred.end());
        all_pixels.gt.insert(all_pixels.gt.end(), pixels.gt.begin(),
                             pixels.gt.end());
      }
      if (!s.pred_csv.empty()) {
        const std::vector<InstanceValue> pred = LoadInstances(s.pred_csv);
        const std::vector<InstanceValue> gt = LoadInstances(s.gt_csv);
        const DepthReport r = ComputeInstanceDepthMetrics(pred, gt);
        entry["instance"] = ToJson(r);
        csv += SceneCsvRow(s.name, "instance", r);
        std::map<std::string, double> gt_by_id;
        for (const InstanceValue& g : gt) gt_by_id[g.id] = g.distance_m;
        std::vector<double> abs_errors;
        for (const InstanceValue& p : pred) {
          const double g = gt_by_id.at(p.id);
          abs_errors.push_back(std::abs(p.distance_m - g));
          all_instance_pred.push_back(p.distance_m);
          all_instance_gt.push_back(g);
        }
        const QuartileSummary q = ComputeQuartiles(abs_errors);
        plot += s.name + "," + FormatDouble(q.min) + "," + FormatDouble(q.q1) +
                "," + FormatDouble(q.median) + "," + FormatDouble(q.q3) + "," +
                FormatDouble(q.max) + "," + std::to_string(q.n) + "\n";
      }
      report["scenes"][s.name] = entry;
    } catch (const Error& e) {
      err << "error: scene " << s.name << ": " << e.what() << "\n";
      ++failures;
      if (!o.run.keep_going) return kExitFailure;
    }
  }
  json overall = json::object();
  if (!all_pixels.pred.empty()) {
    overall["pixel"] = ToJson(ComputeErrorMetrics(all_pixels.pred, all_pixels.gt));
  }
  if (!all_instance_pred.empty()) {
    overall["instance"] =
        ToJson(ComputeErrorMetrics(all_instance_pred, all_instance_gt));
  }
  report["overall"] = overall;

  if (o.out.empty()) {
    out << report.dump(2) << "\n";
  } else {
    WriteJsonFile(o.out, report);
  }
  if (!o.csv.empty()) WriteTextFile(o.csv, csv);
  if (!o.plot.empty()) WriteTextFile(o.plot, plot);
  return failures > 0 ? kExitFailure : kExitOk;
}

// --------------------------------------------------------------------------
// eval-mot

struct EvalMotOptions {
  RunOptions run;
  IntrinsicsOptions intrinsics;
  std::string pred;
  std::string gt;
  double threshold = kDefaultTpThresholdM;
  bool include_coasting = false;
  std::string out;
};

void AddEvalMot(CLI::App& app, EvalMotOptions& o) {
  CLI::App* sub =
      app.add_subcommand("eval-mot", "CLEAR-MOT metrics of 3D tracks");
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  AddRunOptions(sub, o.run, false);
  sub->add_option("--pred", o.pred, "Predicted tracks JSONL")->required();
  sub->add_option("--gt", o.gt, "Ground-truth tracks JSONL")->required();
  sub->add_option("--threshold", o.threshold,
                  "3D distance (m) below which a pair is a true positive")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--include-coasting", o.include_coasting,
                "Also score track rows without a matched detection");
  sub->add_option("--out", o.out, "Report JSON path (default: stdout)");
  AddIntrinsicsOptions(sub, o.intrinsics);
}

int CmdEvalMot(const EvalMotOptions& o, std::ostream& out, std::ostream& err) {
  RequireFile(o.pred, "--pred");
  RequireFile(o.gt, "--gt");
  const std::optional<CameraIntrinsics> intrinsics =
      ResolveIntrinsics(o.intrinsics, std::nullopt, err);
  if (!intrinsics) throw UsageError("eval-mot needs camera intrinsics");

  std::map<int, FrameTracks> pred_frames, gt_frames;
  const auto add = [&](const std::vector<TrackOutput>& rows,
                       std::map<int, FrameTracks>& frames, bool filter) {
    for (const TrackOutput& row : rows) {
      FrameTracks& frame = frames[row.frame_id];
      frame.frame_id = row.frame_id;
      if (filter && !row.matched && !o.include_coasting) continue;
      frame.points.push_back(
          TrackPointFromBox(row.track_id, row.bbox, row.z, *intrinsics));
    }
  };
  add(ReadTracksJsonl(o.gt), gt_frames, false);
  add(ReadTracksJsonl(o.pred), pred_frames, true);
  std::vector<FrameTracks> pred, gt;
  std::set<int> frame_ids;
  for (const auto& [id, unused] : gt_frames) frame_ids.insert(id);
  for (const auto& [id, unused] : pred_frames) frame_ids.insert(id);
  for (int id : frame_ids) {
    const auto p = pred_frames.find(id);
    const auto g = gt_frames.find(id);
    pred.push_back(p != pred_frames.end() ? p->second : FrameTracks{id, {}});
    gt.push_back(g != gt_frames.end() ? g->second : FrameTracks{id, {}});
  }
  const MotReport report = ComputeMotMetrics(pred, gt, o.threshold);
  json document = ToJson(report);
  document["threshold_m"] = o.threshold;
  document["n_frames"] = frame_ids.size();
  if (o.out.empty()) {
    out << document.dump(2) << "\n";
  } else {
    WriteJsonFile(o.out, document);
  }
  return kExitOk;
}

// --------------------------------------------------------------------------
// synth

struct SynthOptions {
  RunOptions run;
  std::string spec;
  std::string out;
  double disparity_scale = 0.1;
  double disparity_shift = 0.01;
  double noise_std = 0.0;
  double outlier_frac = 0.0;
};

void AddSynth(CLI::App& app, SynthOptions& o) {
  CLI::App* sub = app.add_subcommand(
      "synth", "Materialize a synthetic dataset from a scene description");
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  AddRunOptions(sub, o.run, true);
  sub->add_option("--spec", o.spec, "Scene JSON")->required();
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--disparity.scale", o.disparity_scale,
                  "Planted disparity-space scale");
  sub->add_option("--disparity.shift", o.disparity_shift,
                  "Planted disparity-space shift");
  sub->add_option("--disparity.noise-std", o.noise_std,
                  "Gaussian disparity noise")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--disparity.outlier-frac", o.outlier_frac,
                  "Fraction of pixels replaced by uniform outliers")
      ->check(CLI::Range(0.0, 1.0));
}

constexpr uint64_t kDisparityStream = 1000;

int CmdSynth(const SynthOptions& o, std::ostream& out, std::ostream&) {
  RequireFile(o.spec, "--spec");
  SceneSpec spec;
  std::vector<SyntheticFrame> frames;
  try {
    spec = SceneSpecFromJson(json::parse(ReadTextFile(o.spec)));
    frames = RenderScene(spec);
  } catch (const json::exception& e) {
    throw UsageError("scene " + o.spec + ": " + e.what());
  } catch (const Error& e) {
    throw UsageError("scene " + o.spec + ": " + e.what());
  }
  if (!std::isfinite(o.disparity_scale) || o.disparity_scale == 0.0) {
    throw UsageError("--disparity.scale must be finite and nonzero");
  }
  const AffineDepthParams planted{o.disparity_scale, o.disparity_shift,
                                  ParamSpace::kDisparity};
  const CameraIntrinsics& k = spec.intrinsics;
  const ImageSize image = k.size();

  const fs::path dir(o.out);
  for (const char* sub : {"disparity", "depth_gt", "attention"}) {
    CreateDirectories(dir / sub);
  }
  const size_t n = frames.size();
  std::vector<std::string> stems;
  for (size_t t = 0; t < n; ++t) stems.push_back(FrameStem(static_cast<int>(t)));

  const FrameRun run = RunFrames(n, o.run.jobs, false, [&](size_t t) {
    const SyntheticFrame& frame = frames[t];
    // Disparity is derived from the depth exactly as stored on disk.
    const DepthMap stored = QuantizeToMillimeters(frame.gt_depth);
    WriteDepthPng16(dir / "depth_gt" / (stems[t] + ".png"), stored);
    const DisparityMap disparity =
        SynthDisparity(stored, planted, o.noise_std, o.outlier_frac,
                       DeriveSeed(spec.seed, kDisparityStream + t));
    WriteDisparityPfm(dir / "disparity" / (stems[t] + ".pfm"), disparity);
    for (size_t d = 0; d < frame.detections.size(); ++d) {
      WritePfmRaster(
          AttentionPath(dir / "attention", stems[t], frame.detections[d].det_index),
          frame.attention[d].values);
    }
  });
  if (run.failed()) {
    for (const auto& e : run.errors) {
      if (e) throw IoError(*e);
    }
  }

  std::vector<ImageDetections> images;
  std::vector<TrackOutput> gt_tracks;
  std::vector<DistanceRecord> gt_instances;
  for (size_t t = 0; t < n; ++t) {
    const SyntheticFrame& frame = frames[t];
    ImageDetections entry;
    entry.file = stems[t] + ".jpg";
    entry.stem = stems[t];
    entry.frame_id = static_cast<int>(t);
    entry.detections = frame.detections;
    images.push_back(entry);
    for (size_t d = 0; d < frame.detections.size(); ++d) {
      const Detection& det = frame.detections[d];
      const double z = EncodeDepthMillimeters(frame.gt_distances[d]) / 1000.0;
      TrackOutput track;
      track.frame_id = static_cast<int>(t);
      track.track_id = frame.animal_ids[d];
      track.bbox = DetectionBoxPixels(det, image);
      track.z = z;
      track.matched = true;
      track.det_index = det.det_index;
      gt_tracks.push_back(track);
      gt_instances.push_back({static_cast<int>(t), det.det_index, det.category,
                              det.confidence, z,
                              static_cast<int>(frame.masks[d].pixels.size()),
                              false});
    }
  }
  WriteJsonFile(dir / "detections.json", DetectionsToJson(images));
  WriteJsonFile(dir / "intrinsics.json", IntrinsicsToJson(k));
  WriteJsonFile(dir / "scene.json", SceneSpecToJson(spec));
  json disparity_params = ToJson(planted);
  disparity_params["noise_std"] = o.noise_std;
  disparity_params["outlier_frac"] = o.outlier_frac;
  WriteJsonFile(dir / "disparity_params.json", disparity_params);
  WriteTracksJsonl(dir / "gt_tracks.jsonl", gt_tracks);
  WriteDistancesCsv(dir / "gt_instances.csv", gt_instances);
  out << "wrote " << n << " frames, " << gt_instances.size()
      << " animal instances to " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Metric distances and depth-aware tracks for camera-trap video",
               "camdist"};
  app.require_subcommand(1);
  AlignOptions align;
  DistancesOptions distances;
  TrackOptions track;
  EvalDepthOptions eval_depth;
  EvalMotOptions eval_mot;
  SynthOptions synth;
  AddAlign(app, align);
  AddDistances(app, distances);
  AddTrack(app, track);
  AddEvalDepth(app, eval_depth);
  AddEvalMot(app, eval_mot);
  AddSynth(app, synth);

  try {
    std::vector<std::string> expanded = ExpandConfig(args);
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (app.got_subcommand("align")) return CmdAlign(align, out, err);
    if (app.got_subcommand("distances")) {
      return CmdDistances(distances, out, err);
    }
    if (app.got_subcommand("track")) return CmdTrack(track, out, err);
    if (app.got_subcommand("eval-depth")) {
      return CmdEvalDepth(eval_depth, out, err);
    }
    if (app.got_subcommand("eval-mot")) return CmdEvalMot(eval_mot, out, err);
    if (app.got_subcommand("synth")) return CmdSynth(synth, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace camdist
