#include "tunnelpilot/evalreport.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tunnelpilot/rng.hpp"

namespace tp {

uint64_t ConfusionMatrix::total() const {
  uint64_t n = 0;
  for (const auto& row : counts)
    for (uint64_t c : row) n += c;
  return n;
}

uint64_t ConfusionMatrix::row_total(int actual) const {
  uint64_t n = 0;
  for (uint64_t c : counts[actual]) n += c;
  return n;
}

double ConfusionMatrix::percent(int actual, int predicted) const {
  uint64_t rt = row_total(actual);
  if (rt == 0)
    throw std::invalid_argument("confusion: row has no samples to normalize");
  return 100.0 * static_cast<double>(counts[actual][predicted]) /
         static_cast<double>(rt);
}

ConfusionMatrix confusion_matrix(
    const std::vector<std::pair<ClassLabel, ClassLabel>>& actual_predicted) {
  ConfusionMatrix cm;
  for (const auto& [actual, predicted] : actual_predicted) cm.add(actual, predicted);
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  uint64_t n = cm.total();
  if (n == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
  uint64_t diag = 0;
  for (int i = 0; i < kNumClasses; ++i) diag += cm.counts[i][i];
  return static_cast<double>(diag) / static_cast<double>(n);
}

std::pair<std::vector<LabeledImage>, std::vector<LabeledImage>> split_dataset(
    const std::vector<LabeledImage>& items, double train_ratio, uint64_t seed) {
  if (!(train_ratio > 0.0) || !(train_ratio < 1.0))
    throw std::invalid_argument("split: train_ratio must be in (0, 1)");
  if (items.empty()) throw std::invalid_argument("split: empty dataset");

  Rng rng(mix_seed(seed ^ 0x5114ULL));
  std::vector<LabeledImage> train, holdout;
  for (ClassLabel label : kAllLabels) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < items.size(); ++i)
      if (items[i].label == label) idx.push_back(i);
    rng.shuffle(idx);
    auto n_train = static_cast<size_t>(
        std::llround(train_ratio * static_cast<double>(idx.size())));
    n_train = std::min(n_train, idx.size());
    // stable order within each slice
    std::sort(idx.begin(), idx.begin() + n_train);
    std::sort(idx.begin() + n_train, idx.end());
    for (size_t i = 0; i < idx.size(); ++i)
      (i < n_train ? train : holdout).push_back(items[idx[i]]);
  }
  return {std::move(train), std::move(holdout)};
}

EvalReport evaluate(const CnnModel& model, const std::vector<LabeledImage>& items,
                    const std::vector<std::string>& tags) {
  if (items.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (!tags.empty() && tags.size() != items.size())
    throw std::invalid_argument("evaluate: one tag per image required");

  EvalReport rep;
  std::map<std::string, ConfusionMatrix> by_tag;
  for (size_t i = 0; i < items.size(); ++i) {
    ClassLabel pred = predict(model, items[i].image).label;
    rep.overall.add(items[i].label, pred);
    if (!tags.empty()) by_tag[tags[i]].add(items[i].label, pred);
  }
  rep.accuracy = accuracy(rep.overall);
  for (auto& [tag, cm] : by_tag) rep.per_tag.emplace_back(tag, cm);
  return rep;
}

namespace {

void append_matrix_text(std::string& out, const std::string& title,
                        const ConfusionMatrix& cm) {
  out += title + "\n";
  out += "actual \\ predicted   left  center   right\n";
  for (int a = 0; a < kNumClasses; ++a) {
    char line[160];
    if (cm.row_empty(a)) {
      std::snprintf(line, sizeof(line), "%-18s %s\n",
                    label_name(static_cast<ClassLabel>(a)), "(no samples)");
    } else {
      std::snprintf(line, sizeof(line), "%-18s %6.1f  %6.1f  %6.1f\n",
                    label_name(static_cast<ClassLabel>(a)), cm.percent(a, 0),
                    cm.percent(a, 1), cm.percent(a, 2));
    }
    out += line;
  }
  char acc[96];
  std::snprintf(acc, sizeof(acc), "accuracy: %.1f%% (n = %llu)\n",
                100.0 * accuracy(cm),
                static_cast<unsigned long long>(cm.total()));
  out += acc;
}

void append_matrix_csv(std::string& out, const std::string& tag,
                       const ConfusionMatrix& cm) {
  char line[192];
  for (int a = 0; a < kNumClasses; ++a) {
    for (int p = 0; p < kNumClasses; ++p) {
      std::snprintf(line, sizeof(line), "%s,count,%s,%s,%llu\n", tag.c_str(),
                    label_name(static_cast<ClassLabel>(a)),
                    label_name(static_cast<ClassLabel>(p)),
                    static_cast<unsigned long long>(cm.counts[a][p]));
      out += line;
      if (!cm.row_empty(a)) {
        std::snprintf(line, sizeof(line), "%s,row_percent,%s,%s,%.1f\n",
                      tag.c_str(), label_name(static_cast<ClassLabel>(a)),
                      label_name(static_cast<ClassLabel>(p)), cm.percent(a, p));
        out += line;
      }
    }
  }
  std::snprintf(line, sizeof(line), "%s,accuracy,,,%.9g\n", tag.c_str(),
                accuracy(cm));
  out += line;
}

}  // namespace

std::string format_report_text(const EvalReport& report) {
  std::string out;
  append_matrix_text(out, "== overall (row-normalized %) ==", report.overall);
  for (const auto& [tag, cm] : report.per_tag) {
    out += "\n";
    append_matrix_text(out, "== " + tag + " (row-normalized %) ==", cm);
  }
  return out;
}

std::string format_report_csv(const EvalReport& report) {
  std::string out = "tag,metric,actual,predicted,value\n";
  append_matrix_csv(out, "overall", report.overall);
  for (const auto& [tag, cm] : report.per_tag) append_matrix_csv(out, tag, cm);
  return out;
}

}  // namespace tp
