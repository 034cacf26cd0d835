#pragma once

#include "interprobe/common.hpp"
#include "interprobe/data.hpp"
#include "interprobe/nn.hpp"

#include <cstdint>
#include <vector>

namespace interprobe::probe {

/// Training schedule used for probe autoencoders unless overridden.
nn::TrainConfig default_autoencoder_schedule(std::uint64_t seed = 0);

struct AutoencoderSpec {
  int input_dim = 0;
  int hidden_width = 256;
  int bottleneck = 0;
  nn::TrainConfig train = default_autoencoder_schedule();

  void validate() const;
};

/// input -> hidden (relu) -> bottleneck (linear) -> hidden (relu) -> input (linear).
class Autoencoder {
 public:
  static constexpr std::size_t kBottleneckLayer = 1;

  /// Wraps a network with the shape above; throws ValidationError otherwise.
  explicit Autoencoder(nn::Network net);

  const nn::Network& network() const { return net_; }
  int input_dim() const { return net_.input_width(); }
  int bottleneck() const { return net_.layers()[kBottleneckLayer].width; }

  Matrix encode(const Matrix& acts) const;
  Matrix decode(const Matrix& latent) const;
  Matrix reconstruct(const Matrix& acts) const;

 private:
  nn::Network net_;
};

/// Untrained autoencoder with the architecture described by `spec`.
Autoencoder make_autoencoder(const AutoencoderSpec& spec);

/// Fits the autoencoder to reproduce `train_acts.activations` (inputs and
/// targets are the same matrix; labels are never read).
Autoencoder train_autoencoder(const AutoencoderSpec& spec, const data::ActivationSet& train_acts);

double reconstruction_mse(const Autoencoder& ae, const Matrix& acts);

/// Pushes reconstructed tap activations through the frozen network's layers
/// after the tap and scores them against the set's labels. Throws
/// FrozenError when `frozen_net` is not frozen.
nn::Evaluation hybrid_accuracy(const nn::Network& frozen_net, const Autoencoder& ae, const data::ActivationSet& test_acts);

struct ProbeResult {
  int bottleneck = 0;
  int trial = 0;
  double mse_train = 0.0;
  double mse_test = 0.0;
  double base_accuracy = 0.0;
  double hybrid_accuracy = 0.0;
  /// hybrid_accuracy / base_accuracy.
  double relative_accuracy = 0.0;
  std::vector<int> hybrid_predictions;
  Flags hybrid_correct;
  Matrix latent_train;
  Matrix latent_test;
};

struct SweepConfig {
  std::vector<int> bottlenecks = {2, 4, 8, 16};
  int trials = 1;
  std::uint64_t seed = 0;
  int hidden_width = 256;
  nn::TrainConfig schedule = default_autoencoder_schedule();
  int jobs = 1;
  /// Added to the trial index stored in each result.
  int trial_offset = 0;
};

/// One autoencoder per (bottleneck, trial), each on its own seed stream.
/// Results are ordered by bottleneck, then trial.
std::vector<ProbeResult> probe_sweep(const nn::Network& frozen_net, const data::ActivationSet& train_acts,
                                     const data::ActivationSet& test_acts, const SweepConfig& config);

}  // namespace interprobe::probe
