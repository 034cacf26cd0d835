#pragma once

#include "interprobe/common.hpp"
#include "interprobe/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace interprobe::data {

// --- Gaussian task with controlled intrinsic dimension -------------------

/// Haar-distributed orthogonal matrix: Householder QR of a standard-normal
/// matrix with columns of Q flipped so that diag(R) >= 0.
Matrix random_orthogonal(int n, std::uint64_t seed);

struct ToySpec {
  int n_id = 4;
  int n_input = 32;
  int n_classes = 10;
  int train_per_class = 5000;
  int test_per_class = 1000;
  /// Isotropic noise standard deviation; calibrated when absent.
  std::optional<double> sigma;
  double target_accuracy = 0.70;
  std::uint64_t seed = 0;

  void validate() const;
  /// 1000 train / 200 test per class.
  static ToySpec desk(int n_id, std::uint64_t seed);
};

struct ToyGeometry {
  /// n_classes x n_id, i.i.d. standard normal.
  Matrix intrinsic_centers;
  /// n_input x n_input orthogonal.
  Matrix rotation;
  /// Zero-padded intrinsic centers times rotation: n_classes x n_input.
  Matrix embedded_centers;
};

ToyGeometry toy_geometry(const ToySpec& spec);

struct ToyTask {
  Dataset data;
  ToyGeometry geometry;
  double sigma = 0.0;
};

ToyTask make_toy_task(const ToySpec& spec);
Dataset gen_gaussian_task(const ToySpec& spec);

/// Monte Carlo accuracy of the nearest-centroid rule when samples are drawn
/// around `centers` (rows) with isotropic noise `sigma`; classes cycle
/// through the draws so every class gets the same share.
double nearest_centroid_accuracy(const Matrix& centers, double sigma, int draws, std::uint64_t seed);

struct CalibrationOptions {
  double sigma_low = 1e-3;
  double sigma_high = 1e3;
  int draws = 10000;
  double accuracy_tolerance = 0.01;
  int max_iterations = 40;
};

/// Bisection (in log sigma) on the nearest-centroid Monte Carlo accuracy.
/// Throws CalibrationError when the target is not bracketed.
double calibrate_sigma(const Matrix& centers, double target_accuracy, std::uint64_t seed,
                       const CalibrationOptions& options = {});

class CalibrationError : public Error {
 public:
  CalibrationError(double target, double accuracy_low, double accuracy_high);
  double accuracy_low;
  double accuracy_high;
};

// --- MNIST IDX -----------------------------------------------------------

struct IdxImages {
  /// One flattened image per row, scaled to [0, 1].
  Matrix features;
  int rows = 0;
  int cols = 0;
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Reads a whole file; gzip-compressed files are inflated transparently.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

struct LabelledImages {
  Matrix features;
  std::vector<int> labels;
};

LabelledImages load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct MnistPaths {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;

  /// Standard file names (optionally .gz) inside `dir`.
  static MnistPaths in_directory(const std::filesystem::path& dir);
};

/// Loads MNIST, keeping the first `train_limit` / `test_limit` samples
/// (0 keeps everything).
Dataset load_mnist(const MnistPaths& paths, long train_limit = 0, long test_limit = 0);

// --- activation dumps ("NACT") -------------------------------------------

enum class Split : std::uint8_t { train = 0, test = 1 };

struct ActivationSet {
  Matrix activations;
  std::vector<int> labels;
  std::vector<int> base_predictions;
  double base_accuracy = 0.0;
  Split split = Split::train;
  int n_classes = 0;
  std::string source;

  long size() const { return activations.rows(); }
  long dim() const { return activations.cols(); }
  Flags base_correct() const;
  void validate() const;

  /// Fills base_accuracy from the predictions.
  static ActivationSet make(Matrix activations, std::vector<int> labels, std::vector<int> base_predictions,
                            int n_classes, Split split, std::string source);
};

std::vector<std::uint8_t> encode_activations(const ActivationSet& set);
ActivationSet decode_activations(std::span<const std::uint8_t> bytes, std::string source = {});
void dump_activations(const ActivationSet& set, const std::filesystem::path& path);
ActivationSet load_activations(const std::filesystem::path& path);

// --- tuning-curve embeddings -------------------------------------------------

/// Gaussian tuning responses: out(s, j) = exp(-|s - c_j|^2 / (2 width^2)).
Matrix tuning_curve_embed(const Matrix& samples, const Matrix& centers, double width);

/// One intrinsic-vs-embedded hull demonstration.
struct TuningDemo {
  std::string name;
  Matrix centers;
  double width = 0.0;
  Matrix train_intrinsic;
  Matrix test_intrinsic;
  Matrix train_embedded;
  Matrix test_embedded;
};

/// Two neurons with centers at -1 and +1, width 0.75; train points at the
/// centers, 99 test points evenly spaced between them.
TuningDemo tuning_demo_1d();
/// Three neurons at 90/210/330 degrees on radius 0.6, width 0.8; train points
/// on the unit circle, test points on the radius-0.5 circle.
TuningDemo tuning_demo_2d(int points_per_circle = 24);

// --- plain-text dataset files ---------------------------------------------

/// dataset.json + train.csv + test.csv (label first, then features).
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace interprobe::data
