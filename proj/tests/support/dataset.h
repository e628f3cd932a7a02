#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "camdist/pipeline.h"

namespace camdist::testing {

// Directory holding the bundled example scene description.
std::filesystem::path TestDataDir();

// Reads a directory written by `camdist synth` into library pipeline input:
// disparity PFMs, ground-truth PNG16s, detections and attention maps.
PipelineInput LoadSynthDataset(const std::filesystem::path& dir);

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

// Runs the command-line front end in process.
CliResult RunCommand(const std::vector<std::string>& args);

}  // namespace camdist::testing
