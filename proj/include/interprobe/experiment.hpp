#pragma once

#include "interprobe/common.hpp"
#include "interprobe/data.hpp"
#include "interprobe/hull.hpp"
#include "interprobe/nn.hpp"
#include "interprobe/probe.hpp"
#include "interprobe/report.hpp"
#include "interprobe/stats.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace interprobe::experiment {

enum class DatasetKind { toy, mnist, activations };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::toy;
  /// toy: ToySpec::seed is ignored; each trial draws a fresh task from the
  /// experiment seed.
  data::ToySpec toy = data::ToySpec::desk(4, 0);
  /// mnist: directory holding the four IDX files; limits of 0 keep everything.
  std::string mnist_dir;
  long train_limit = 10000;
  long test_limit = 2000;
  /// activations: NACT dumps plus the frozen layers after the tap.
  std::string train_activations;
  std::string test_activations;
  std::string head_network;
};

struct NetworkConfig {
  /// Hidden layers; a softmax output layer of n_classes is appended.
  std::vector<nn::LayerSpec> hidden = {{32, nn::Activation::relu, 0.0}};
  /// Hidden layer probed; -1 selects the last hidden layer.
  int tap_index = -1;
  nn::TrainConfig train;
};

struct ProbeConfig {
  std::vector<int> bottlenecks = {2, 4, 8, 16};
  int trials = 1;
  int hidden_width = 256;
  nn::TrainConfig schedule = probe::default_autoencoder_schedule();
};

struct AnalysisConfig {
  bool hull = true;
  /// Bottlenecks whose latent spaces get hull tests (empty: all probed).
  std::vector<int> hull_bottlenecks;
  double hull_tolerance = 1e-6;
  long hull_max_generators = 0;
  bool distances = true;
  /// Latent space used for the distance analyses (0: the largest probed).
  int distance_bottleneck = 0;
  std::vector<stats::Metric> metrics = {stats::kAllMetrics.begin(), stats::kAllMetrics.end()};
  int n_bins = 10;
  int bootstrap_resamples = 1000;
  bool export_latents = false;
  bool plots = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  int jobs = 1;
  DatasetConfig dataset;
  NetworkConfig network;
  ProbeConfig probe;
  AnalysisConfig analysis;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  /// The subset checked before training a classifier: name, jobs, dataset and
  /// network.
  void validate_training() const;

  /// Rejects unknown fields and wrong types with the JSON path of the problem.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Canonical JSON with every field present.
  std::string to_json() const;
  /// FNV-1a of the canonical JSON.
  std::uint64_t hash() const;

  /// Desk-scale presets; `full` switches to the larger sizes.
  static ExperimentConfig toy_preset(int n_id, bool full = false);
  static ExperimentConfig mnist_preset(const std::string& mnist_dir, int first_width = 256, bool full = false);
};

std::string to_string(DatasetKind kind);

/// Seeds of the per-trial streams.
struct TrialSeeds {
  std::uint64_t data = 0;
  std::uint64_t init = 0;
  std::uint64_t train = 0;
  std::uint64_t probe = 0;
  std::uint64_t hull = 0;
};
TrialSeeds trial_seeds(std::uint64_t seed, int trial);

struct TrialBase {
  int trial = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_loss = 0.0;
  std::uint64_t network_checksum = 0;
  std::optional<double> sigma;
  /// Labels and base-network predictions of the tapped sets.
  int n_classes = 0;
  std::vector<int> train_labels;
  std::vector<int> train_predictions;
  std::vector<int> test_labels;
  std::vector<int> test_predictions;
};

struct HullRow {
  int bottleneck = 0;
  int trial = 0;
  double fraction = 0.0;
  long generators_used = 0;
  std::vector<hull::HullCertificate> certificates;
};

struct LogisticRow {
  std::string space;
  stats::Metric metric{};
  int trial = 0;
  stats::LogisticFit fit;
};

struct KsRow {
  std::string space;
  stats::Metric metric{};
  int trial = 0;
  stats::KsResult ks;
};

struct BinRow {
  std::string space;
  stats::Metric metric{};
  int trial = 0;
  std::vector<stats::Bin> bins;
};

struct Summary {
  double mean = 0.0;
  stats::Interval ci;
  int n = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialBase> base;
  std::vector<probe::ProbeResult> probe;
  std::vector<HullRow> hull;
  std::vector<stats::DistanceReport> distances;
  std::vector<BinRow> bins;
  std::vector<LogisticRow> logistic;
  std::vector<KsRow> ks;
  int distance_bottleneck = 0;

  /// Per-bottleneck trial means with bootstrap intervals.
  std::map<int, Summary> relative_accuracy() const;
  std::map<int, Summary> hull_fraction() const;
  Summary ks_summary(const std::string& space, stats::Metric metric) const;

  /// Every CSV artifact keyed by its relative path.
  std::map<std::string, report::Table> tables() const;
};

using Logger = std::function<void(const std::string&)>;

/// Trains, probes and analyses as configured. Nothing is written to disk.
ExperimentResult run_experiment(const ExperimentConfig& config, const Logger& log = {});

/// Deciles, KS and (when the report carries hull flags) logistic fits for
/// every configured metric of one report, appended to `out`.
void analyse_distances(const ExperimentConfig& config, const stats::DistanceReport& report, ExperimentResult& out,
                       const Logger& log = {});

/// Writes CSV, JSON and SVG artifacts for a finished run into `dir`, plus
/// manifest.json recording the config, its hash, per-trial seeds, library
/// versions and `command`.
void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir, const std::string& command = {});

/// Library and compiler versions recorded in manifests.
std::map<std::string, std::string> build_versions();

/// Renders the SVG plots of a run from its CSV tables.
std::map<std::string, std::string> render_plots(const std::map<std::string, report::Table>& tables);

// --- tuning-curve hull demonstrations ---------------------------------------------

struct Fig1Case {
  data::TuningDemo demo;
  hull::HullFraction intrinsic;
  hull::HullFraction embedded;
};

/// The 1D/2-neuron and 2D/3-neuron demonstrations with hull verdicts in both
/// spaces.
std::vector<Fig1Case> run_fig1(double tolerance = 1e-6);
/// fig1_points.csv and fig1_summary.csv.
std::map<std::string, report::Table> fig1_tables(const std::vector<Fig1Case>& cases);
/// Scatter plots of each case in intrinsic and embedded coordinates.
std::map<std::string, std::string> fig1_plots(const std::vector<Fig1Case>& cases);

}  // namespace interprobe::experiment
