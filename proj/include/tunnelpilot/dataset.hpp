#pragma once

#include <filesystem>
#include <vector>

#include "tunnelpilot/image.hpp"
#include "tunnelpilot/label.hpp"

namespace tp {

struct LabeledImage {
  GrayImage image;
  ClassLabel label;
};

// Reads <root>/{left,center,right}/*.pgm. Files are taken in lexicographic
// order per class, left then center then right, so the result is stable.
// Missing root or a class directory with no readable images is an error.
std::vector<LabeledImage> load_labeled_dataset(const std::filesystem::path& root);

}  // namespace tp
