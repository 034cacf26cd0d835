#include "interprobe/probe.hpp"

#include <algorithm>
#include <limits>

namespace interprobe::probe {

nn::TrainConfig default_autoencoder_schedule(std::uint64_t seed) {
  nn::TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 128;
  cfg.loss = nn::Loss::mean_squared_error;
  cfg.seed = seed;
  return cfg;
}

void AutoencoderSpec::validate() const {
  if (input_dim < 2) throw ValidationError("autoencoder: input_dim must be at least 2");
  if (bottleneck < 1 || bottleneck >= input_dim)
    throw ValidationError("autoencoder: bottleneck " + std::to_string(bottleneck) + " must lie in [1, input_dim=" +
                          std::to_string(input_dim) + ")");
  if (hidden_width < 1) throw ValidationError("autoencoder: hidden_width must be positive");
  if (train.loss != nn::Loss::mean_squared_error) throw ValidationError("autoencoder: loss must be mean_squared_error");
  train.validate();
}

Autoencoder::Autoencoder(nn::Network net) : net_(std::move(net)) {
  const auto& layers = net_.layers();
  using nn::Activation;
  const bool shaped = layers.size() == 4 && layers[0].activation == Activation::relu &&
                      layers[1].activation == Activation::linear && layers[2].activation == Activation::relu &&
                      layers[3].activation == Activation::linear && layers[3].width == net_.input_width() &&
                      layers[0].width == layers[2].width;
  if (!shaped) throw ValidationError("autoencoder: expected input-relu-linear-relu-linear(input) layout");
}

Matrix Autoencoder::encode(const Matrix& acts) const { return nn::forward_layers(net_, acts, 0, kBottleneckLayer + 1); }

Matrix Autoencoder::decode(const Matrix& latent) const {
  return nn::forward_layers(net_, latent, kBottleneckLayer + 1, net_.depth());
}

Matrix Autoencoder::reconstruct(const Matrix& acts) const { return nn::forward_layers(net_, acts, 0, net_.depth()); }

Autoencoder make_autoencoder(const AutoencoderSpec& spec) {
  spec.validate();
  using nn::Activation;
  std::vector<nn::LayerSpec> layers = {{spec.hidden_width, Activation::relu, 0.0},
                                       {spec.bottleneck, Activation::linear, 0.0},
                                       {spec.hidden_width, Activation::relu, 0.0},
                                       {spec.input_dim, Activation::linear, 0.0}};
  return Autoencoder(nn::Network::create(spec.input_dim, std::move(layers), static_cast<int>(Autoencoder::kBottleneckLayer),
                                         spec.train.seed));
}

Autoencoder train_autoencoder(const AutoencoderSpec& spec, const data::ActivationSet& train_acts) {
  spec.validate();
  if (train_acts.dim() != spec.input_dim)
    throw DimensionError("train_autoencoder: activation width", spec.input_dim, train_acts.dim());
  auto result = nn::fit(make_autoencoder(spec).network(), train_acts.activations, train_acts.activations, spec.train);
  return Autoencoder(std::move(result.network));
}

double reconstruction_mse(const Autoencoder& ae, const Matrix& acts) {
  if (acts.size() == 0) return 0.0;
  return (ae.reconstruct(acts) - acts).squaredNorm() / static_cast<double>(acts.size());
}

nn::Evaluation hybrid_accuracy(const nn::Network& frozen_net, const Autoencoder& ae, const data::ActivationSet& test_acts) {
  if (!frozen_net.frozen()) throw FrozenError("hybrid_accuracy: the base network must be frozen");
  if (frozen_net.tap_width() != ae.input_dim())
    throw DimensionError("hybrid_accuracy: tap width vs autoencoder input", frozen_net.tap_width(), ae.input_dim());
  if (test_acts.dim() != ae.input_dim())
    throw DimensionError("hybrid_accuracy: activation width", ae.input_dim(), test_acts.dim());
  const Matrix rebuilt = ae.reconstruct(test_acts.activations);
  const auto first = static_cast<std::size_t>(frozen_net.tap_index() + 1);
  const Matrix output = nn::forward_layers(frozen_net, rebuilt, first, frozen_net.depth());
  return nn::score_predictions(nn::argmax_rows(output), test_acts.labels);
}

std::vector<ProbeResult> probe_sweep(const nn::Network& frozen_net, const data::ActivationSet& train_acts,
                                     const data::ActivationSet& test_acts, const SweepConfig& config) {
  if (config.bottlenecks.empty()) throw ValidationError("probe_sweep: empty bottleneck list");
  if (config.trials < 1) throw ValidationError("probe_sweep: trials must be positive");
  if (!frozen_net.frozen()) throw FrozenError("probe_sweep: the base network must be frozen");
  if (train_acts.dim() != test_acts.dim())
    throw DimensionError("probe_sweep: train vs test activation width", train_acts.dim(), test_acts.dim());

  std::vector<int> widths = config.bottlenecks;
  std::sort(widths.begin(), widths.end());
  struct Task {
    int bottleneck;
    int trial;
  };
  std::vector<Task> tasks;
  for (int b : widths)
    for (int t = 0; t < config.trials; ++t) tasks.push_back({b, t});

  std::vector<ProbeResult> results(tasks.size());
  parallel_for(tasks.size(), config.jobs, [&](std::size_t i) {
    const auto [bottleneck, trial] = tasks[i];
    AutoencoderSpec spec;
    spec.input_dim = static_cast<int>(train_acts.dim());
    spec.hidden_width = config.hidden_width;
    spec.bottleneck = bottleneck;
    spec.train = config.schedule;
    spec.train.loss = nn::Loss::mean_squared_error;
    spec.train.seed = derive_seed(config.seed, "autoencoder",
                                  {static_cast<std::uint64_t>(bottleneck), static_cast<std::uint64_t>(trial)});
    const Autoencoder ae = train_autoencoder(spec, train_acts);
    auto hybrid = hybrid_accuracy(frozen_net, ae, test_acts);

    ProbeResult& r = results[i];
    r.bottleneck = bottleneck;
    r.trial = trial + config.trial_offset;
    r.mse_train = reconstruction_mse(ae, train_acts.activations);
    r.mse_test = reconstruction_mse(ae, test_acts.activations);
    r.base_accuracy = test_acts.base_accuracy;
    r.hybrid_accuracy = hybrid.accuracy;
    r.relative_accuracy = r.base_accuracy > 0.0 ? r.hybrid_accuracy / r.base_accuracy
                                                : std::numeric_limits<double>::quiet_NaN();
    r.hybrid_predictions = std::move(hybrid.predicted);
    r.hybrid_correct = std::move(hybrid.correct);
    r.latent_train = ae.encode(train_acts.activations);
    r.latent_test = ae.encode(test_acts.activations);
  });
  return results;
}

}  // namespace interprobe::probe
