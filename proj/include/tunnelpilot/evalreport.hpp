#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tunnelpilot/dataset.hpp"
#include "tunnelpilot/model.hpp"

namespace tp {

// Rows are actual classes, columns predicted, in Left/Center/Right order.
struct ConfusionMatrix {
  std::array<std::array<uint64_t, kNumClasses>, kNumClasses> counts{};

  void add(ClassLabel actual, ClassLabel predicted) {
    counts[label_index(actual)][label_index(predicted)]++;
  }
  uint64_t total() const;
  uint64_t row_total(int actual) const;
  bool row_empty(int actual) const { return row_total(actual) == 0; }
  // row-normalized percentage; the row must be non-empty
  double percent(int actual, int predicted) const;
};

ConfusionMatrix confusion_matrix(
    const std::vector<std::pair<ClassLabel, ClassLabel>>& actual_predicted);

// trace / total; throws on an empty matrix
double accuracy(const ConfusionMatrix& cm);

// Seeded stratified split: each class is shuffled independently and cut at
// round(train_ratio * class_count). Returns (train, holdout).
std::pair<std::vector<LabeledImage>, std::vector<LabeledImage>> split_dataset(
    const std::vector<LabeledImage>& items, double train_ratio, uint64_t seed);

struct EvalReport {
  ConfusionMatrix overall;
  double accuracy = 0.0;
  // condition tag -> matrix, sorted by tag; empty when no tags were supplied
  std::vector<std::pair<std::string, ConfusionMatrix>> per_tag;
};

// Runs the model over the set. tags, when present, must parallel items and
// names the capture condition of each image (site, illumination bin, ...).
EvalReport evaluate(const CnnModel& model, const std::vector<LabeledImage>& items,
                    const std::vector<std::string>& tags = {});

// Fixed-width table (percentages to one decimal, empty rows flagged).
std::string format_report_text(const EvalReport& report);
// Long-form CSV: tag,actual,predicted,count,row_percent plus accuracy lines.
std::string format_report_csv(const EvalReport& report);

}  // namespace tp
