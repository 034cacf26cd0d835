#include "interprobe/data.hpp"

#include <cmath>
#include <numbers>

namespace interprobe::data {

Matrix tuning_curve_embed(const Matrix& samples, const Matrix& centers, double width) {
  if (!(width > 0.0)) throw ValidationError("tuning_curve_embed: width must be positive");
  if (samples.cols() != centers.cols())
    throw DimensionError("tuning_curve_embed: sample vs center dimension", centers.cols(), samples.cols());
  Matrix out(samples.rows(), centers.rows());
  const double denom = 2.0 * width * width;
  for (long s = 0; s < samples.rows(); ++s)
    for (long j = 0; j < centers.rows(); ++j) out(s, j) = std::exp(-(samples.row(s) - centers.row(j)).squaredNorm() / denom);
  return out;
}

TuningDemo tuning_demo_1d() {
  TuningDemo demo;
  demo.name = "1d";
  demo.width = 0.75;
  demo.centers = Matrix{{-1.0}, {1.0}};
  demo.train_intrinsic = Matrix{{-1.0}, {1.0}};
  constexpr int kTest = 99;
  demo.test_intrinsic.resize(kTest, 1);
  for (int i = 0; i < kTest; ++i) demo.test_intrinsic(i, 0) = -1.0 + 2.0 * (i + 1) / (kTest + 1);
  demo.train_embedded = tuning_curve_embed(demo.train_intrinsic, demo.centers, demo.width);
  demo.test_embedded = tuning_curve_embed(demo.test_intrinsic, demo.centers, demo.width);
  return demo;
}

TuningDemo tuning_demo_2d(int points_per_circle) {
  if (points_per_circle < 3) throw ValidationError("tuning_demo_2d: need at least 3 points per circle");
  TuningDemo demo;
  demo.name = "2d";
  demo.width = 0.8;
  demo.centers.resize(3, 2);
  const double angles[3] = {90.0, 210.0, 330.0};
  for (int j = 0; j < 3; ++j) {
    const double rad = angles[j] * std::numbers::pi / 180.0;
    demo.centers(j, 0) = 0.6 * std::cos(rad);
    demo.centers(j, 1) = 0.6 * std::sin(rad);
  }
  demo.train_intrinsic.resize(points_per_circle, 2);
  demo.test_intrinsic.resize(points_per_circle, 2);
  for (int i = 0; i < points_per_circle; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / points_per_circle;
    // Test points sit half a step off the train angles.
    const double phi = 2.0 * std::numbers::pi * (i + 0.5) / points_per_circle;
    demo.train_intrinsic(i, 0) = std::cos(theta);
    demo.train_intrinsic(i, 1) = std::sin(theta);
    demo.test_intrinsic(i, 0) = 0.5 * std::cos(phi);
    demo.test_intrinsic(i, 1) = 0.5 * std::sin(phi);
  }
  demo.train_embedded = tuning_curve_embed(demo.train_intrinsic, demo.centers, demo.width);
  demo.test_embedded = tuning_curve_embed(demo.test_intrinsic, demo.centers, demo.width);
  return demo;
}

}  // namespace interprobe::data
