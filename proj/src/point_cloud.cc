#include "camdist/point_cloud.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "camdist/error.h"

namespace camdist {

Eigen::Vector3d UnprojectPixel(double u, double v, double depth,
                               const CameraIntrinsics& intrinsics) {
  return {(u - intrinsics.u0) / intrinsics.focal_px * depth,
          (v - intrinsics.v0) / intrinsics.focal_px * depth, depth};
}

Eigen::Vector2d ProjectPoint(const Eigen::Vector3d& point,
                             const CameraIntrinsics& intrinsics) {
  return {intrinsics.focal_px * point.x() / point.z() + intrinsics.u0,
          intrinsics.focal_px * point.y() / point.z() + intrinsics.v0};
}

PointCloud Unproject(const DepthMap& depth,
                     const CameraIntrinsics& intrinsics) {
  if (depth.size() != intrinsics.size()) {
    std::ostringstream msg;
    msg << "Unproject: depth is " << depth.width() << "x" << depth.height()
        << " but intrinsics are " << intrinsics.width << "x"
        << intrinsics.height;
    throw DimensionMismatchError(msg.str());
  }
  PointCloud cloud;
  cloud.points.reserve(depth.CountValid());
  cloud.source_pixels.reserve(cloud.points.capacity());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.IsValid(u, v)) continue;
      cloud.points.push_back(UnprojectPixel(u, v, depth.Value(u, v), intrinsics));
      cloud.source_pixels.emplace_back(u, v);
    }
  }
  return cloud;
}

void WritePlyAscii(const PointCloud& cloud, const std::filesystem::path& path) {
  if (cloud.empty()) {
    throw InvalidArgumentError("WritePlyAscii: point cloud is empty");
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
       << "\nproperty float x\nproperty float y\nproperty float z\n"
          "end_header\n";
  char line[96];
  for (const Eigen::Vector3d& p : cloud.points) {
    std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n",
                  static_cast<float>(p.x()), static_cast<float>(p.y()),
                  static_cast<float>(p.z()));
    file << line;
  }
  if (!file) throw IoError("failed writing " + path.string());
}

PointCloud ReadPlyAscii(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(file, line) || line != "ply") {
    throw ParseError(path.string() + ": not a PLY file");
  }
  size_t count = 0;
  bool ascii = false;
  std::vector<std::string> properties;
  while (std::getline(file, line) && line != "end_header") {
    std::istringstream tokens(line);
    std::string keyword;
    tokens >> keyword;
    if (keyword == "format") {
      std::string kind;
      tokens >> kind;
      ascii = kind == "ascii";
    } else if (keyword == "element") {
      std::string name;
      tokens >> name >> count;
    } else if (keyword == "property") {
      std::string type, name;
      tokens >> type >> name;
      properties.push_back(name);
    }
  }
  if (!ascii) throw ParseError(path.string() + ": only ASCII PLY is supported");
  if (properties.size() < 3 || properties[0] != "x" || properties[1] != "y" ||
      properties[2] != "z") {
    throw ParseError(path.string() + ": expected x, y, z vertex properties");
  }
  PointCloud cloud;
  cloud.points.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(file, line)) {
      throw ParseError(path.string() + ": truncated vertex list");
    }
    std::istringstream values(line);
    float x, y, z;
    if (!(values >> x >> y >> z)) {
      throw ParseError(path.string() + ": bad vertex on line " +
                       std::to_string(i + 1));
    }
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

}  // namespace camdist
