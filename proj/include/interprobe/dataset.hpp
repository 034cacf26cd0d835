#pragma once

#include "interprobe/common.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace interprobe {

/// Per-sample boolean flags (correct, inside, ...). One byte per sample so
/// they can be viewed as spans.
using Flags = std::vector<std::uint8_t>;

/// Labelled train/test split sharing one feature dimension.
struct Dataset {
  Matrix train_features;
  std::vector<int> train_labels;
  Matrix test_features;
  std::vector<int> test_labels;
  int n_classes = 0;
  /// JSON text describing where the data came from.
  std::string provenance;

  long dim() const { return train_features.cols(); }
  /// Throws ValidationError / LabelError / DimensionError.
  void validate() const;
};

/// Throws LabelError naming the first row whose label is outside [0, n_classes).
void check_labels(std::span<const int> labels, int n_classes);

double mean_flag(std::span<const std::uint8_t> flags);

}  // namespace interprobe
