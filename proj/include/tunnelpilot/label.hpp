#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tp {

// Heading class produced by the classifier. The index order is load-bearing:
// it fixes one-hot targets, softmax output slots and confusion matrix axes.
enum class ClassLabel : uint8_t { Left = 0, Center = 1, Right = 2 };

constexpr int kNumClasses = 3;
constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::Left, ClassLabel::Center, ClassLabel::Right};

inline int label_index(ClassLabel l) { return static_cast<int>(l); }

inline const char* label_name(ClassLabel l) {
  switch (l) {
    case ClassLabel::Left: return "left";
    case ClassLabel::Center: return "center";
    case ClassLabel::Right: return "right";
  }
  throw std::invalid_argument("label: bad enum value");
}

inline ClassLabel label_from_name(const std::string& name) {
  if (name == "left") return ClassLabel::Left;
  if (name == "center") return ClassLabel::Center;
  if (name == "right") return ClassLabel::Right;
  throw std::invalid_argument("label: unknown class name '" + name + "'");
}

}  // namespace tp
