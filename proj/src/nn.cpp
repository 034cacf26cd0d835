#include "interprobe/nn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace interprobe::nn {

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Matrix softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (long r = 0; r < z.rows(); ++r) {
    const double shift = z.row(r).maxCoeff();
    out.row(r) = (z.row(r).array() - shift).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::linear:
      return z;
    case Activation::softmax:
      return softmax_rows(z);
  }
  return z;
}

// dL/dz from dL/da for one layer.
Matrix activation_backward(const Matrix& grad_act, const Matrix& pre, const Matrix& activated, Activation a) {
  switch (a) {
    case Activation::relu:
      return grad_act.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    case Activation::linear:
      return grad_act;
    case Activation::softmax: {
      const Eigen::VectorXd dot = grad_act.cwiseProduct(activated).rowwise().sum();
      Matrix out = grad_act;
      out.colwise() -= dot;
      return out.cwiseProduct(activated);
    }
  }
  return grad_act;
}

const std::vector<int>& require_labels(const Targets& targets, long rows, int n_classes) {
  const auto* labels = std::get_if<std::vector<int>>(&targets);
  if (labels == nullptr) throw ValidationError("cross_entropy loss requires integer labels");
  if (static_cast<long>(labels->size()) != rows)
    throw DimensionError("label count", rows, static_cast<long>(labels->size()));
  check_labels(*labels, n_classes);
  return *labels;
}

const Matrix& require_values(const Targets& targets, long rows, long cols) {
  const auto* values = std::get_if<Matrix>(&targets);
  if (values == nullptr) throw ValidationError("mean_squared_error loss requires a target matrix");
  if (values->rows() != rows) throw DimensionError("target rows", rows, values->rows());
  if (values->cols() != cols) throw DimensionError("target columns", cols, values->cols());
  return *values;
}

template <class T>
void hash_bytes(std::uint64_t& h, const T* data, std::size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < count * sizeof(T); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::linear:
      return "linear";
    case Activation::softmax:
      return "softmax";
  }
  return "?";
}

std::string to_string(Loss l) { return l == Loss::cross_entropy ? "cross_entropy" : "mean_squared_error"; }

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  if (name == "softmax") return Activation::softmax;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

Loss parse_loss(std::string_view name) {
  if (name == "cross_entropy") return Loss::cross_entropy;
  if (name == "mean_squared_error" || name == "mse") return Loss::mean_squared_error;
  throw ValidationError("unknown loss '" + std::string(name) + "'");
}

// --- Network ---------------------------------------------------------------

Network Network::create(int input_width, std::vector<LayerSpec> layers, int tap_index, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "init"));
  std::normal_distribution<double> normal(0.0, 1.0);
  Parameters params;
  int fan_in = input_width;
  for (const auto& layer : layers) {
    if (layer.width < 1 || fan_in < 1) throw ValidationError("layer widths must be positive");
    const double scale = layer.activation == Activation::relu ? std::sqrt(2.0 / fan_in)
                                                              : std::sqrt(2.0 / (fan_in + layer.width));
    DenseParams p{Matrix(fan_in, layer.width), RowVector::Zero(layer.width)};
    for (long r = 0; r < p.weight.rows(); ++r)
      for (long c = 0; c < p.weight.cols(); ++c) p.weight(r, c) = normal(rng) * scale;
    params.push_back(std::move(p));
    fan_in = layer.width;
  }
  return Network(input_width, std::move(layers), std::move(params), tap_index);
}

Network::Network(int input_width, std::vector<LayerSpec> layers, Parameters params, int tap_index)
    : input_width_(input_width), layers_(std::move(layers)), params_(std::move(params)), tap_index_(tap_index) {
  if (input_width_ < 1) throw ValidationError("network input width must be positive");
  if (layers_.empty()) throw ValidationError("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.width < 1) throw ValidationError("layer " + std::to_string(i) + ": width must be positive");
    if (!(layer.dropout_rate >= 0.0 && layer.dropout_rate < 1.0))
      throw ValidationError("layer " + std::to_string(i) + ": dropout rate must lie in [0, 1)");
    if (layer.activation == Activation::softmax && i + 1 != layers_.size())
      throw ValidationError("layer " + std::to_string(i) + ": softmax is only allowed on the final layer");
  }
  if (layers_.back().dropout_rate != 0.0) throw ValidationError("the output layer cannot use dropout");
  if (tap_index_ < -1 || tap_index_ >= static_cast<int>(layers_.size()))
    throw ValidationError("tap index " + std::to_string(tap_index_) + " out of range");
  check_shapes(params_);
}

void Network::check_shapes(const Parameters& params) const {
  if (params.size() != layers_.size())
    throw DimensionError("parameter layer count", static_cast<long>(layers_.size()), static_cast<long>(params.size()));
  long fan_in = input_width_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (params[i].weight.rows() != fan_in) throw DimensionError("weight rows", fan_in, params[i].weight.rows());
    if (params[i].weight.cols() != layers_[i].width)
      throw DimensionError("weight columns", layers_[i].width, params[i].weight.cols());
    if (params[i].bias.size() != layers_[i].width)
      throw DimensionError("bias length", layers_[i].width, params[i].bias.size());
    fan_in = layers_[i].width;
  }
}

Parameters& Network::mutable_parameters() {
  if (frozen_) throw FrozenError("network is frozen; parameters cannot be modified");
  return params_;
}

void Network::set_parameters(Parameters params) {
  if (frozen_) throw FrozenError("network is frozen; parameters cannot be modified");
  check_shapes(params);
  params_ = std::move(params);
}

std::uint64_t Network::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    hash_bytes(h, p.weight.data(), static_cast<std::size_t>(p.weight.size()));
    hash_bytes(h, p.bias.data(), static_cast<std::size_t>(p.bias.size()));
  }
  return h;
}

// --- forward / backward ------------------------------------------------------

ForwardPass forward(const Network& net, const Matrix& batch, bool training_mode, std::uint64_t seed) {
  if (batch.cols() != net.input_width()) throw DimensionError("forward: batch columns", net.input_width(), batch.cols());
  const std::size_t depth = net.depth();
  ForwardPass pass;
  pass.input = batch;
  pass.pre.reserve(depth);
  pass.activated.reserve(depth);
  pass.post.reserve(depth);
  pass.masks.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& spec = net.layers()[i];
    const auto& p = net.parameters()[i];
    const Matrix& in = i == 0 ? pass.input : pass.post.back();
    Matrix z = in * p.weight;
    z.rowwise() += p.bias;
    Matrix a = activate(z, spec.activation);
    Matrix mask;
    Matrix out;
    if (training_mode && spec.dropout_rate > 0.0) {
      const double keep = 1.0 - spec.dropout_rate;
      std::mt19937_64 rng(derive_seed(seed, {i}));
      mask.resize(a.rows(), a.cols());
      for (long r = 0; r < mask.rows(); ++r)
        for (long c = 0; c < mask.cols(); ++c) mask(r, c) = unit_uniform(rng) < keep ? 1.0 / keep : 0.0;
      out = a.cwiseProduct(mask);
    } else {
      out = a;
    }
    pass.pre.push_back(std::move(z));
    pass.activated.push_back(std::move(a));
    pass.post.push_back(std::move(out));
    pass.masks.push_back(std::move(mask));
  }
  return pass;
}

Matrix forward_layers(const Network& net, const Matrix& acts, std::size_t first, std::size_t last) {
  if (first > last || last > net.depth()) throw ValidationError("forward_layers: bad layer range");
  const long expected = first == 0 ? net.input_width() : net.layers()[first - 1].width;
  if (acts.cols() != expected) throw DimensionError("forward_layers: input columns", expected, acts.cols());
  Matrix a = acts;
  for (std::size_t i = first; i < last; ++i) {
    const auto& p = net.parameters()[i];
    Matrix z = a * p.weight;
    z.rowwise() += p.bias;
    a = activate(z, net.layers()[i].activation);
  }
  return a;
}

double loss_value(const Network& net, const Matrix& output, const Targets& targets, Loss loss) {
  const long rows = output.rows();
  if (rows == 0) return 0.0;
  if (loss == Loss::cross_entropy) {
    const auto& labels = require_labels(targets, rows, net.output_width());
    double total = 0.0;
    if (net.layers().back().activation == Activation::softmax) {
      for (long r = 0; r < rows; ++r) total -= std::log(std::max(output(r, labels[r]), 1e-300));
    } else {
      for (long r = 0; r < rows; ++r) {
        const double shift = output.row(r).maxCoeff();
        const double lse = shift + std::log((output.row(r).array() - shift).exp().sum());
        total += lse - output(r, labels[r]);
      }
    }
    return total / static_cast<double>(rows);
  }
  const auto& values = require_values(targets, rows, output.cols());
  return (output - values).squaredNorm() / static_cast<double>(output.size());
}

Parameters backward(const Network& net, const ForwardPass& pass, const Targets& targets, Loss loss) {
  const std::size_t depth = net.depth();
  if (pass.post.size() != depth) throw DimensionError("backward: forward pass depth", static_cast<long>(depth),
                                                      static_cast<long>(pass.post.size()));
  const std::size_t last = depth - 1;
  const Matrix& out = pass.post[last];
  const long rows = out.rows();
  const double batch = static_cast<double>(std::max<long>(rows, 1));
  const Activation out_act = net.layers()[last].activation;

  Matrix delta;  // dL/dz of the current layer
  if (loss == Loss::cross_entropy) {
    const auto& labels = require_labels(targets, rows, net.output_width());
    if (out_act == Activation::softmax) {
      delta = pass.activated[last];
      for (long r = 0; r < rows; ++r) delta(r, labels[r]) -= 1.0;
      delta /= batch;
    } else {
      Matrix grad = softmax_rows(out);
      for (long r = 0; r < rows; ++r) grad(r, labels[r]) -= 1.0;
      grad /= batch;
      delta = activation_backward(grad, pass.pre[last], pass.activated[last], out_act);
    }
  } else {
    const auto& values = require_values(targets, rows, out.cols());
    const Matrix grad = 2.0 * (out - values) / static_cast<double>(std::max<long>(out.size(), 1));
    delta = activation_backward(grad, pass.pre[last], pass.activated[last], out_act);
  }

  Parameters grads(depth);
  for (std::size_t i = depth; i-- > 0;) {
    const Matrix& in = i == 0 ? pass.input : pass.post[i - 1];
    grads[i].weight = in.transpose() * delta;
    grads[i].bias = delta.colwise().sum();
    if (i == 0) break;
    Matrix grad_post = delta * net.parameters()[i].weight.transpose();
    if (pass.masks[i - 1].size() > 0) grad_post = grad_post.cwiseProduct(pass.masks[i - 1]);
    delta = activation_backward(grad_post, pass.pre[i - 1], pass.activated[i - 1], net.layers()[i - 1].activation);
  }
  return grads;
}

// --- optimisation --------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ValidationError("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ValidationError("adam_beta2 must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ValidationError("adam_epsilon must be positive");
}

AdamState AdamState::zeros_like(const Parameters& params) {
  AdamState state;
  for (const auto& p : params) {
    state.first_moment.push_back({Matrix::Zero(p.weight.rows(), p.weight.cols()), RowVector::Zero(p.bias.size())});
    state.second_moment.push_back({Matrix::Zero(p.weight.rows(), p.weight.cols()), RowVector::Zero(p.bias.size())});
  }
  return state;
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& state, const TrainConfig& config) {
  if (grads.size() != params.size())
    throw DimensionError("adam_step: gradient layer count", static_cast<long>(params.size()),
                         static_cast<long>(grads.size()));
  if (state.first_moment.empty() && state.step == 0) state = AdamState::zeros_like(params);
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw DimensionError("adam_step: state layer count", static_cast<long>(params.size()),
                         static_cast<long>(state.first_moment.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].weight.rows() != params[i].weight.rows() || grads[i].weight.cols() != params[i].weight.cols() ||
        state.first_moment[i].weight.size() != params[i].weight.size())
      throw DimensionError("adam_step: weight size", params[i].weight.size(), grads[i].weight.size());
    if (grads[i].bias.size() != params[i].bias.size() || state.first_moment[i].bias.size() != params[i].bias.size())
      throw DimensionError("adam_step: bias size", params[i].bias.size(), grads[i].bias.size());
  }

  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate;
  const double eps = config.adam_epsilon;

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = b1 * m.array() + (1.0 - b1) * g.array();
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i].weight, grads[i].weight, state.first_moment[i].weight, state.second_moment[i].weight);
    update(params[i].bias, grads[i].bias, state.first_moment[i].bias, state.second_moment[i].bias);
  }
}

TrainResult fit(Network net, const Matrix& inputs, const Targets& targets, const TrainConfig& config) {
  config.validate();
  if (net.frozen()) throw FrozenError("cannot train a frozen network");
  const long rows = inputs.rows();
  if (rows == 0) throw ValidationError("cannot train on an empty dataset");
  if (inputs.cols() != net.input_width()) throw DimensionError("fit: input columns", net.input_width(), inputs.cols());
  const bool classify = config.loss == Loss::cross_entropy;
  if (classify)
    require_labels(targets, rows, net.output_width());
  else
    require_values(targets, rows, net.output_width());

  AdamState state = AdamState::zeros_like(net.parameters());
  std::vector<long> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), 0L);
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, "shuffle"));

  TrainResult result{std::move(net), {}};
  Network& model = result.network;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with a multiply-shift bound so the permutation does not
    // depend on the standard library's distribution implementation.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(shuffle_rng()) * i) >> 64);
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t hits = 0;
    std::uint64_t batch_index = 0;
    for (long start = 0; start < rows; start += config.batch_size, ++batch_index) {
      const long stop = std::min<long>(rows, start + config.batch_size);
      const std::vector<long> rows_in_batch(order.begin() + start, order.begin() + stop);
      const Matrix batch = select_rows(inputs, rows_in_batch);
      Targets batch_targets;
      if (classify) {
        const auto& labels = std::get<std::vector<int>>(targets);
        std::vector<int> subset;
        subset.reserve(rows_in_batch.size());
        for (long r : rows_in_batch) subset.push_back(labels[static_cast<std::size_t>(r)]);
        batch_targets = std::move(subset);
      } else {
        batch_targets = select_rows(std::get<Matrix>(targets), rows_in_batch);
      }
      const auto pass = forward(model, batch, true,
                                derive_seed(config.seed, "dropout", {static_cast<std::uint64_t>(epoch), batch_index}));
      loss_sum += loss_value(model, pass.output(), batch_targets, config.loss) * static_cast<double>(stop - start);
      if (classify) {
        const auto predicted = argmax_rows(pass.output());
        const auto& labels = std::get<std::vector<int>>(batch_targets);
        for (std::size_t r = 0; r < predicted.size(); ++r) hits += predicted[r] == labels[r];
      }
      const auto grads = backward(model, pass, batch_targets, config.loss);
      adam_step(model.mutable_parameters(), grads, state, config);
    }
    EpochStats stats;
    stats.loss = loss_sum / static_cast<double>(rows);
    stats.accuracy = classify ? static_cast<double>(hits) / static_cast<double>(rows)
                              : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(stats);
  }
  return result;
}

TrainResult train(Network net, const Dataset& data, const TrainConfig& config) {
  data.validate();
  if (data.train_features.rows() == 0) throw ValidationError("cannot train on an empty dataset");
  if (data.n_classes > net.output_width())
    throw DimensionError("train: output width vs classes", data.n_classes, net.output_width());
  if (config.loss == Loss::cross_entropy) return fit(std::move(net), data.train_features, data.train_labels, config);
  Matrix onehot = Matrix::Zero(data.train_features.rows(), net.output_width());
  for (std::size_t r = 0; r < data.train_labels.size(); ++r) onehot(static_cast<long>(r), data.train_labels[r]) = 1.0;
  return fit(std::move(net), data.train_features, onehot, config);
}

// --- evaluation ------------------------------------------------------------------

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()), 0);
  for (long r = 0; r < m.rows(); ++r) {
    int best = 0;
    for (long c = 1; c < m.cols(); ++c)
      if (m(r, c) > m(r, best)) best = static_cast<int>(c);
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

Evaluation score_predictions(std::vector<int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size())
    throw DimensionError("prediction count", static_cast<long>(labels.size()), static_cast<long>(predicted.size()));
  Evaluation eval;
  eval.correct.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) eval.correct[i] = predicted[i] == labels[i];
  eval.accuracy = mean_flag(eval.correct);
  eval.predicted = std::move(predicted);
  return eval;
}

namespace {
constexpr long kInferenceChunk = 2048;

Matrix chunked(const Network& net, const Matrix& features, std::size_t last) {
  if (features.cols() != net.input_width())
    throw DimensionError("inference: feature columns", net.input_width(), features.cols());
  const long width = last == 0 ? net.input_width() : net.layers()[last - 1].width;
  Matrix out(features.rows(), width);
  for (long start = 0; start < features.rows(); start += kInferenceChunk) {
    const long n = std::min(kInferenceChunk, features.rows() - start);
    out.middleRows(start, n) = forward_layers(net, features.middleRows(start, n), 0, last);
  }
  return out;
}
}  // namespace

Matrix predict(const Network& net, const Matrix& features) { return chunked(net, features, net.depth()); }

Matrix tap_activations(const Network& net, const Matrix& features) {
  return chunked(net, features, static_cast<std::size_t>(net.tap_index() + 1));
}

Evaluation evaluate(const Network& net, const Matrix& features, std::span<const int> labels) {
  return score_predictions(argmax_rows(predict(net, features)), labels);
}

Evaluation evaluate(const Network& net, const Dataset& data) {
  return evaluate(net, data.test_features, data.test_labels);
}

Network head_network(const Network& net) {
  const auto first = static_cast<std::size_t>(net.tap_index() + 1);
  if (first >= net.depth()) throw ValidationError("head_network: the tap is the output layer");
  std::vector<LayerSpec> layers(net.layers().begin() + static_cast<long>(first), net.layers().end());
  Parameters params(net.parameters().begin() + static_cast<long>(first), net.parameters().end());
  Network head(net.tap_width(), std::move(layers), std::move(params), -1);
  if (net.frozen()) head.freeze();
  return head;
}

// --- persistence -----------------------------------------------------------------

void save_network(const Network& net, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format"] = "interprobe-network";
  doc["version"] = 1;
  doc["input_width"] = net.input_width();
  doc["tap_index"] = net.tap_index();
  doc["frozen"] = net.frozen();
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const auto& spec = net.layers()[i];
    const auto& p = net.parameters()[i];
    nlohmann::json weight = nlohmann::json::array();
    for (long r = 0; r < p.weight.rows(); ++r)
      weight.push_back(std::vector<double>(p.weight.row(r).data(), p.weight.row(r).data() + p.weight.cols()));
    layers.push_back({{"width", spec.width},
                      {"activation", to_string(spec.activation)},
                      {"dropout_rate", spec.dropout_rate},
                      {"weight", std::move(weight)},
                      {"bias", std::vector<double>(p.bias.data(), p.bias.data() + p.bias.size())}});
  }
  doc["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw Error("cannot write network file " + path.string());
  out << doc.dump() << '\n';
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read network file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    if (doc.at("format") != "interprobe-network") throw ValidationError("not a network file: " + path.string());
    if (doc.at("version") != 1) throw ValidationError("unsupported network file version");
    std::vector<LayerSpec> specs;
    Parameters params;
    for (const auto& layer : doc.at("layers")) {
      LayerSpec spec{layer.at("width").get<int>(), parse_activation(layer.at("activation").get<std::string>()),
                     layer.at("dropout_rate").get<double>()};
      const auto rows = layer.at("weight").get<std::vector<std::vector<double>>>();
      const auto bias = layer.at("bias").get<std::vector<double>>();
      DenseParams p{Matrix(static_cast<long>(rows.size()), spec.width), RowVector(static_cast<long>(bias.size()))};
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<long>(rows[r].size()) != spec.width)
          throw DimensionError("network file weight row", spec.width, static_cast<long>(rows[r].size()));
        for (std::size_t c = 0; c < rows[r].size(); ++c) p.weight(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
      }
      for (std::size_t c = 0; c < bias.size(); ++c) p.bias(static_cast<long>(c)) = bias[c];
      specs.push_back(spec);
      params.push_back(std::move(p));
    }
    Network net(doc.at("input_width").get<int>(), std::move(specs), std::move(params), doc.at("tap_index").get<int>());
    if (doc.value("frozen", false)) net.freeze();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed network file " + path.string() + ": " + e.what());
  }
}

}  // namespace interprobe::nn
