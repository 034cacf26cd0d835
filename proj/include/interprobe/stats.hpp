#pragma once

#include "interprobe/common.hpp"
#include "interprobe/dataset.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace interprobe::stats {

enum class Metric { euclidean_nn, cosine_nn, class_conditional_nn };

std::string to_string(Metric metric);
Metric parse_metric(std::string_view name);
inline constexpr std::array<Metric, 3> kAllMetrics = {Metric::euclidean_nn, Metric::cosine_nn,
                                                      Metric::class_conditional_nn};

/// Distance from every query row to its nearest reference row (exhaustive
/// scan). The class-conditional metric only considers references that share
/// the query's label. Cosine distance is 1 - cos, and 1 when either vector is
/// zero.
std::vector<double> nn_distance(const Matrix& queries, const Matrix& references, Metric metric,
                                std::span<const int> reference_labels = {}, std::span<const int> query_labels = {},
                                int jobs = 1);

struct Bin {
  double mean_distance = 0.0;
  double accuracy = 0.0;
  long count = 0;
  /// Row indices of the samples in this bin.
  std::vector<long> members;
};

/// Equal-count bins by increasing distance (ties by index); the first
/// M % n_bins bins take one extra sample.
std::vector<Bin> binned_accuracy(std::span<const double> distances, std::span<const std::uint8_t> correct,
                                 int n_bins = 10);

inline constexpr std::array<const char*, 4> kLogisticTerms = {"intercept", "distance", "in_hull", "distance:in_hull"};

struct LogisticFit {
  /// intercept, z-scored distance, in_hull, distance x in_hull.
  std::array<double, 4> coefficients{};
  std::array<double, 4> standard_errors{};
  std::array<double, 4> z_values{};
  /// False for design columns that are identically zero (coefficient 0,
  /// standard error and z-value NaN).
  std::array<bool, 4> identified{};
  bool converged = false;
  int iterations = 0;
  /// Log-likelihood after each accepted step, starting from the zero vector.
  std::vector<double> log_likelihood;
  double distance_mean = 0.0;
  double distance_sd = 0.0;
};

struct IrlsOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
  double ridge = 1e-9;
};

/// Maximum-likelihood logistic regression of correct ~ distance * in_hull by
/// iteratively reweighted least squares, with step halving so the
/// log-likelihood never decreases. Throws ValidationError for fewer than 8
/// samples or constant outcomes.
LogisticFit logistic_fit(std::span<const double> distance, std::span<const std::uint8_t> in_hull,
                         std::span<const std::uint8_t> correct, const IrlsOptions& options = {});

/// The design matrix used by logistic_fit: columns 1, z, h, z*h.
Eigen::MatrixXd logistic_design(std::span<const double> distance, std::span<const std::uint8_t> in_hull,
                                double* mean = nullptr, double* sd = nullptr);

struct KsResult {
  double statistic = 0.0;
  long n_a = 0;
  long n_b = 0;
};

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
KsResult ks_statistic(std::span<const double> sample_a, std::span<const double> sample_b);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

/// Percentile bootstrap interval for the mean.
Interval bootstrap_ci(std::span<const double> values, int resamples = 1000, double level = 0.95,
                      std::uint64_t seed = 0);

/// Per-test-sample distances and flags for one space and trial.
struct DistanceReport {
  std::string space;  // "neural" or "latent"
  int trial = 0;
  std::map<Metric, std::vector<double>> distances;
  Flags correct;
  std::optional<Flags> in_hull;

  long size() const { return static_cast<long>(correct.size()); }
};

struct GroupStat {
  bool correct = false;
  bool in_hull = false;
  double mean_distance = 0.0;
  long count = 0;
};

/// Mean distance per (correct, in_hull) cell, pooled over reports. Empty
/// cells are omitted.
std::vector<GroupStat> correctness_by_hull_table(std::span<const DistanceReport> reports, Metric metric);

/// Splits distances into (correct, incorrect) samples.
std::pair<std::vector<double>, std::vector<double>> split_by_correctness(std::span<const double> distances,
                                                                         std::span<const std::uint8_t> correct);

}  // namespace interprobe::stats
