#include "interprobe/dataset.hpp"

#include <numeric>

namespace interprobe {

void check_labels(std::span<const int> labels, int n_classes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw LabelError(static_cast<long>(i), labels[i], n_classes);
  }
}

double mean_flag(std::span<const std::uint8_t> flags) {
  if (flags.empty()) return 0.0;
  const auto hits = std::accumulate(flags.begin(), flags.end(), std::size_t{0},
                                    [](std::size_t acc, std::uint8_t f) { return acc + (f != 0); });
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

void Dataset::validate() const {
  if (n_classes < 1) throw ValidationError("dataset: n_classes must be positive");
  if (static_cast<long>(train_labels.size()) != train_features.rows())
    throw DimensionError("dataset: train label count", train_features.rows(), static_cast<long>(train_labels.size()));
  if (static_cast<long>(test_labels.size()) != test_features.rows())
    throw DimensionError("dataset: test label count", test_features.rows(), static_cast<long>(test_labels.size()));
  if (test_features.rows() > 0 && train_features.rows() > 0 && test_features.cols() != train_features.cols())
    throw DimensionError("dataset: test feature columns", train_features.cols(), test_features.cols());
  check_labels(train_labels, n_classes);
  check_labels(test_labels, n_classes);
}

}  // namespace interprobe
