#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ember/dataset.hpp"

namespace ember {

// Seeded toy segmentation problem: each image is a bright disk of random
// radius and centre on a noisy background, with a 0/1 label map.
struct DiskSpec {
  std::int64_t count = 32;
  std::int64_t size = 16;  // images are size x size
  std::uint64_t seed = 0;
  double noise = 0.1;
};

// Writes <root>/<split>/image_NNN.nii and label_NNN.nii plus the manifest
// <root>/<split>.json, whose paths are relative to <root>. Returns the manifest.
Dataset write_disk_fixtures(const std::filesystem::path& root, const std::string& split, const DiskSpec& spec);

// Two Gaussian clusters in the plane: "x" has shape [2], "y" is the class id 0 or 1.
Dataset two_clusters(std::int64_t count, std::uint64_t seed, double separation = 3.0);

}  // namespace ember
