#include "camdist/raster.h"

#include <algorithm>

namespace camdist {

size_t MaskedRaster::CountValid() const {
  const auto mask = valid.data();
  return static_cast<size_t>(
      std::count_if(mask.begin(), mask.end(), [](uint8_t m) { return m != 0; }));
}

const char* DepthKindName(DepthKind kind) {
  switch (kind) {
    case DepthKind::kApproximate:
      return "approximate";
    case DepthKind::kMetric:
      return "metric";
    case DepthKind::kGroundTruth:
      return "ground_truth";
  }
  return "unknown";
}

}  // namespace camdist
