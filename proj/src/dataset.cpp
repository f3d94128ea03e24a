#include "tunnelpilot/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace tp {

std::vector<LabeledImage> load_labeled_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    throw std::runtime_error("dataset: directory not found: " + root.string());

  std::vector<LabeledImage> out;
  for (ClassLabel label : kAllLabels) {
    auto dir = root / label_name(label);
    if (!std::filesystem::is_directory(dir))
      throw std::runtime_error("dataset: missing class directory " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm")
        files.push_back(e.path());
    }
    if (files.empty())
      throw std::runtime_error("dataset: no .pgm images in " + dir.string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back({load_pgm_file(f), label});
  }
  return out;
}

}  // namespace tp
