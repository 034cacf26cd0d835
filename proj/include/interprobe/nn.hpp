#pragma once

#include "interprobe/common.hpp"
#include "interprobe/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace interprobe::nn {

enum class Activation { relu, linear, softmax };
enum class Loss { cross_entropy, mean_squared_error };

std::string to_string(Activation a);
std::string to_string(Loss l);
Activation parse_activation(std::string_view name);
Loss parse_loss(std::string_view name);

struct LayerSpec {
  int width = 0;
  Activation activation = Activation::relu;
  /// Fraction of this layer's outputs dropped during training.
  double dropout_rate = 0.0;
};

/// Weights of one dense layer: y = x * weight + bias, weight is fan_in x width.
struct DenseParams {
  Matrix weight;
  RowVector bias;
};
using Parameters = std::vector<DenseParams>;

/// A stack of dense layers. `tap_index` names the layer whose outputs form the
/// neural space under study (-1 means the network input itself).
class Network {
 public:
  /// Builds a network with He-normal (relu) or Glorot-normal (linear, softmax)
  /// weights and zero biases.
  static Network create(int input_width, std::vector<LayerSpec> layers, int tap_index, std::uint64_t seed);

  Network(int input_width, std::vector<LayerSpec> layers, Parameters params, int tap_index);

  int input_width() const { return input_width_; }
  int output_width() const { return layers_.back().width; }
  std::size_t depth() const { return layers_.size(); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Parameters& parameters() const { return params_; }

  int tap_index() const { return tap_index_; }
  int tap_width() const { return tap_index_ < 0 ? input_width_ : layers_[static_cast<std::size_t>(tap_index_)].width; }

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  /// Throws FrozenError when frozen.
  Parameters& mutable_parameters();
  /// Replaces all parameters; shapes must match. Throws FrozenError when frozen.
  void set_parameters(Parameters params);

  /// Hash of every parameter bit pattern.
  std::uint64_t checksum() const;

 private:
  void check_shapes(const Parameters& params) const;

  int input_width_;
  std::vector<LayerSpec> layers_;
  Parameters params_;
  int tap_index_;
  bool frozen_ = false;
};

struct ForwardPass {
  Matrix input;
  /// Pre-activations per layer.
  std::vector<Matrix> pre;
  /// Activation outputs before dropout.
  std::vector<Matrix> activated;
  /// What the next layer sees (after dropout in training mode).
  std::vector<Matrix> post;
  /// Inverted-dropout multipliers (0 or 1/keep); empty for layers without dropout.
  std::vector<Matrix> masks;

  const Matrix& output() const { return post.back(); }
};

ForwardPass forward(const Network& net, const Matrix& batch, bool training_mode, std::uint64_t seed = 0);

/// Inference through layers [first, last), starting from activations that feed
/// layer `first`.
Matrix forward_layers(const Network& net, const Matrix& acts, std::size_t first, std::size_t last);

/// Class labels (cross-entropy) or regression targets (mean squared error).
using Targets = std::variant<std::vector<int>, Matrix>;

double loss_value(const Network& net, const Matrix& output, const Targets& targets, Loss loss);

/// Gradients of the batch-mean loss with respect to every weight and bias,
/// reusing the dropout masks recorded in `pass`.
Parameters backward(const Network& net, const ForwardPass& pass, const Targets& targets, Loss loss);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  Loss loss = Loss::cross_entropy;

  void validate() const;
};

struct AdamState {
  Parameters first_moment;
  Parameters second_moment;
  long step = 0;

  static AdamState zeros_like(const Parameters& params);
};

void adam_step(Parameters& params, const Parameters& grads, AdamState& state, const TrainConfig& config);

struct EpochStats {
  double loss = 0.0;
  /// Training accuracy over the epoch's batches; NaN for regression.
  double accuracy = 0.0;
};

struct TrainResult {
  Network network;
  std::vector<EpochStats> history;
};

/// Mini-batch Adam on (inputs, targets). Shuffling and dropout streams are
/// derived from config.seed only.
TrainResult fit(Network net, const Matrix& inputs, const Targets& targets, const TrainConfig& config);

/// Trains a classifier on the dataset's training split.
TrainResult train(Network net, const Dataset& data, const TrainConfig& config);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> predicted;
  Flags correct;
};

/// Argmax per row, lowest index on ties.
std::vector<int> argmax_rows(const Matrix& m);

Evaluation score_predictions(std::vector<int> predicted, std::span<const int> labels);

/// Inference-mode output for every row.
Matrix predict(const Network& net, const Matrix& features);
/// Inference-mode activations of the tap layer.
Matrix tap_activations(const Network& net, const Matrix& features);

Evaluation evaluate(const Network& net, const Matrix& features, std::span<const int> labels);
/// Evaluates on the test split.
Evaluation evaluate(const Network& net, const Dataset& data);

/// The layers after the tap as a network whose input is the tap activations
/// (tap_index -1). Frozen when `net` is.
Network head_network(const Network& net);

void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace interprobe::nn
