#include "interprobe/experiment.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#ifndef INTERPROBE_VERSION
#define INTERPROBE_VERSION "0.0.0"
#endif

namespace interprobe::experiment {

using nlohmann::json;

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::toy:
      return "toy";
    case DatasetKind::mnist:
      return "mnist";
    case DatasetKind::activations:
      return "activations";
  }
  return "?";
}

namespace {

DatasetKind parse_kind(const std::string& s) {
  if (s == "toy") return DatasetKind::toy;
  if (s == "mnist") return DatasetKind::mnist;
  if (s == "activations") return DatasetKind::activations;
  throw ValidationError("dataset.kind: unknown kind '" + s + "' (toy, mnist, activations)");
}

// Walks one JSON object, recording which keys were read so that leftovers can
// be reported as unknown fields.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(where() + ": expected an object");
  }

  template <typename T>
  bool get(const char* key, T& out) {
    const auto it = node_.find(key);
    if (it == node_.end()) return false;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ValidationError(sub(key) + ": wrong type (" + std::string(it->type_name()) + ")");
    }
    return true;
  }

  void get_optional(const char* key, std::optional<double>& out) {
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    seen_.insert(key);
    if (it->is_null()) {
      out.reset();
      return;
    }
    if (!it->is_number()) throw ValidationError(sub(key) + ": expected a number or null");
    out = it->get<double>();
  }

  /// Visits a nested object when present.
  template <typename Fn>
  void object(const char* key, Fn&& fn) {
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    seen_.insert(key);
    Reader child(*it, sub(key));
    fn(child);
    child.finish();
  }

  /// Visits each element of a nested array of objects; returns false when absent.
  template <typename Fn>
  bool array(const char* key, Fn&& fn) {
    const auto it = node_.find(key);
    if (it == node_.end()) return false;
    seen_.insert(key);
    if (!it->is_array()) throw ValidationError(sub(key) + ": expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      Reader child((*it)[i], sub(key) + "[" + std::to_string(i) + "]");
      fn(child);
      child.finish();
    }
    return true;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!seen_.contains(key)) throw ValidationError(sub(key.c_str()) + ": unknown field");
  }

  std::string sub(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }
  std::string where() const { return path_.empty() ? std::string("config") : path_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_train(Reader& r, nn::TrainConfig& cfg) {
  r.get("epochs", cfg.epochs);
  r.get("batch_size", cfg.batch_size);
  r.get("learning_rate", cfg.learning_rate);
  r.get("adam_beta1", cfg.adam_beta1);
  r.get("adam_beta2", cfg.adam_beta2);
  r.get("adam_epsilon", cfg.adam_epsilon);
}

json write_train(const nn::TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2},
          {"adam_epsilon", cfg.adam_epsilon}};
}

std::uint64_t tag_seed(std::uint64_t seed, std::string_view tag, std::initializer_list<std::uint64_t> ids = {}) {
  return derive_seed(seed, tag, ids);
}

}  // namespace

// --- configuration ---------------------------------------------------------------

void ExperimentConfig::validate_training() const {
  if (name.empty()) throw ValidationError("name: must not be empty");
  if (jobs < 1) throw ValidationError("jobs: must be at least 1");

  switch (dataset.kind) {
    case DatasetKind::toy:
      dataset.toy.validate();
      break;
    case DatasetKind::mnist:
      if (dataset.mnist_dir.empty()) throw ValidationError("dataset.mnist.dir: required for mnist datasets");
      if (dataset.train_limit < 0 || dataset.test_limit < 0)
        throw ValidationError("dataset.mnist: limits must be nonnegative");
      break;
    case DatasetKind::activations:
      if (dataset.train_activations.empty() || dataset.test_activations.empty() || dataset.head_network.empty())
        throw ValidationError("dataset.activations: train, test and head are all required");
      break;
  }
  if (dataset.kind != DatasetKind::activations) {
    if (network.hidden.empty()) throw ValidationError("network.hidden: at least one hidden layer is required");
    for (std::size_t i = 0; i < network.hidden.size(); ++i) {
      const auto& l = network.hidden[i];
      const std::string at = "network.hidden[" + std::to_string(i) + "]";
      if (l.width < 1) throw ValidationError(at + ".width: must be positive");
      if (!(l.dropout_rate >= 0.0 && l.dropout_rate < 1.0)) throw ValidationError(at + ".dropout: must lie in [0, 1)");
      if (l.activation == nn::Activation::softmax) throw ValidationError(at + ".activation: softmax is output-only");
    }
    const int last = static_cast<int>(network.hidden.size()) - 1;
    if (network.tap_index < -1 || network.tap_index > last)
      throw ValidationError("network.tap_index: must lie in [-1, " + std::to_string(last) + "]");
    try {
      network.train.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("network.train: ") + e.what());
    }
  }

}

namespace {

int tap_width_of(const ExperimentConfig& c) {
  if (c.dataset.kind == DatasetKind::activations || c.network.hidden.empty()) return 0;
  const int last = static_cast<int>(c.network.hidden.size()) - 1;
  return c.network.hidden[static_cast<std::size_t>(c.network.tap_index < 0 ? last : c.network.tap_index)].width;
}

}  // namespace

void ExperimentConfig::validate() const {
  validate_training();
  const int tap_width = tap_width_of(*this);
  if (probe.bottlenecks.empty()) throw ValidationError("probe.bottlenecks: must not be empty");
  std::set<int> unique;
  for (int b : probe.bottlenecks) {
    if (b < 1) throw ValidationError("probe.bottlenecks: widths must be positive");
    if (tap_width > 0 && b >= tap_width)
      throw ValidationError("probe.bottlenecks: width " + std::to_string(b) + " is not below the tap width " +
                            std::to_string(tap_width));
    if (!unique.insert(b).second) throw ValidationError("probe.bottlenecks: duplicate width " + std::to_string(b));
  }
  if (probe.trials < 1) throw ValidationError("probe.trials: must be at least 1");
  if (probe.hidden_width < 1) throw ValidationError("probe.hidden_width: must be positive");
  try {
    probe.schedule.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("probe.schedule: ") + e.what());
  }

  for (int b : analysis.hull_bottlenecks)
    if (!unique.contains(b))
      throw ValidationError("analysis.hull_bottlenecks: " + std::to_string(b) + " is not a probed bottleneck");
  if (analysis.distance_bottleneck != 0 && !unique.contains(analysis.distance_bottleneck))
    throw ValidationError("analysis.distance_bottleneck: " + std::to_string(analysis.distance_bottleneck) +
                          " is not a probed bottleneck");
  if (!(analysis.hull_tolerance > 0.0)) throw ValidationError("analysis.hull_tolerance: must be positive");
  if (analysis.hull_max_generators < 0) throw ValidationError("analysis.hull_max_generators: must be nonnegative");
  if (analysis.metrics.empty()) throw ValidationError("analysis.metrics: must not be empty");
  if (std::set<stats::Metric>(analysis.metrics.begin(), analysis.metrics.end()).size() != analysis.metrics.size())
    throw ValidationError("analysis.metrics: duplicate metric");
  if (analysis.n_bins < 1) throw ValidationError("analysis.n_bins: must be positive");
  if (analysis.bootstrap_resamples < 1) throw ValidationError("analysis.bootstrap_resamples: must be positive");
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader root(doc, "");
  root.get("name", c.name);
  root.get("seed", c.seed);
  root.get("jobs", c.jobs);
  root.object("dataset", [&](Reader& r) {
    std::string kind = to_string(c.dataset.kind);
    r.get("kind", kind);
    c.dataset.kind = parse_kind(kind);
    r.object("toy", [&](Reader& t) {
      t.get("n_id", c.dataset.toy.n_id);
      t.get("n_input", c.dataset.toy.n_input);
      t.get("n_classes", c.dataset.toy.n_classes);
      t.get("train_per_class", c.dataset.toy.train_per_class);
      t.get("test_per_class", c.dataset.toy.test_per_class);
      t.get_optional("sigma", c.dataset.toy.sigma);
      t.get("target_accuracy", c.dataset.toy.target_accuracy);
    });
    r.object("mnist", [&](Reader& m) {
      m.get("dir", c.dataset.mnist_dir);
      m.get("train_limit", c.dataset.train_limit);
      m.get("test_limit", c.dataset.test_limit);
    });
    r.object("activations", [&](Reader& a) {
      a.get("train", c.dataset.train_activations);
      a.get("test", c.dataset.test_activations);
      a.get("head", c.dataset.head_network);
    });
  });
  root.object("network", [&](Reader& r) {
    std::vector<nn::LayerSpec> hidden;
    if (r.array("hidden", [&](Reader& l) {
          nn::LayerSpec spec;
          std::string act = "relu";
          l.get("width", spec.width);
          l.get("activation", act);
          l.get("dropout", spec.dropout_rate);
          try {
            spec.activation = nn::parse_activation(act);
          } catch (const Error& e) {
            throw ValidationError("network.hidden: " + std::string(e.what()));
          }
          hidden.push_back(spec);
        }))
      c.network.hidden = hidden;
    r.get("tap_index", c.network.tap_index);
    r.object("train", [&](Reader& t) { read_train(t, c.network.train); });
  });
  root.object("probe", [&](Reader& r) {
    r.get("bottlenecks", c.probe.bottlenecks);
    r.get("trials", c.probe.trials);
    r.get("hidden_width", c.probe.hidden_width);
    r.object("schedule", [&](Reader& t) { read_train(t, c.probe.schedule); });
  });
  root.object("analysis", [&](Reader& r) {
    r.get("hull", c.analysis.hull);
    r.get("hull_bottlenecks", c.analysis.hull_bottlenecks);
    r.get("hull_tolerance", c.analysis.hull_tolerance);
    r.get("hull_max_generators", c.analysis.hull_max_generators);
    r.get("distances", c.analysis.distances);
    r.get("distance_bottleneck", c.analysis.distance_bottleneck);
    std::vector<std::string> metrics;
    if (r.get("metrics", metrics)) {
      c.analysis.metrics.clear();
      for (const auto& m : metrics) c.analysis.metrics.push_back(stats::parse_metric(m));
    }
    r.get("n_bins", c.analysis.n_bins);
    r.get("bootstrap_resamples", c.analysis.bootstrap_resamples);
    r.get("export_latents", c.analysis.export_latents);
    r.get("plots", c.analysis.plots);
  });
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string ExperimentConfig::to_json() const {
  json hidden = json::array();
  for (const auto& l : network.hidden)
    hidden.push_back({{"width", l.width}, {"activation", nn::to_string(l.activation)}, {"dropout", l.dropout_rate}});
  std::vector<std::string> metrics;
  for (auto m : analysis.metrics) metrics.push_back(stats::to_string(m));
  json doc = {
      {"name", name},
      {"seed", seed},
      {"jobs", jobs},
      {"dataset",
       {{"kind", to_string(dataset.kind)},
        {"toy",
         {{"n_id", dataset.toy.n_id},
          {"n_input", dataset.toy.n_input},
          {"n_classes", dataset.toy.n_classes},
          {"train_per_class", dataset.toy.train_per_class},
          {"test_per_class", dataset.toy.test_per_class},
          {"sigma", dataset.toy.sigma ? json(*dataset.toy.sigma) : json(nullptr)},
          {"target_accuracy", dataset.toy.target_accuracy}}},
        {"mnist", {{"dir", dataset.mnist_dir}, {"train_limit", dataset.train_limit}, {"test_limit", dataset.test_limit}}},
        {"activations",
         {{"train", dataset.train_activations}, {"test", dataset.test_activations}, {"head", dataset.head_network}}}}},
      {"network", {{"hidden", hidden}, {"tap_index", network.tap_index}, {"train", write_train(network.train)}}},
      {"probe",
       {{"bottlenecks", probe.bottlenecks},
        {"trials", probe.trials},
        {"hidden_width", probe.hidden_width},
        {"schedule", write_train(probe.schedule)}}},
      {"analysis",
       {{"hull", analysis.hull},
        {"hull_bottlenecks", analysis.hull_bottlenecks},
        {"hull_tolerance", analysis.hull_tolerance},
        {"hull_max_generators", analysis.hull_max_generators},
        {"distances", analysis.distances},
        {"distance_bottleneck", analysis.distance_bottleneck},
        {"metrics", metrics},
        {"n_bins", analysis.n_bins},
        {"bootstrap_resamples", analysis.bootstrap_resamples},
        {"export_latents", analysis.export_latents},
        {"plots", analysis.plots}}}};
  return doc.dump(2);
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(to_json()); }

ExperimentConfig ExperimentConfig::toy_preset(int n_id, bool full) {
  ExperimentConfig c;
  c.name = "toy-nid" + std::to_string(n_id);
  c.dataset.kind = DatasetKind::toy;
  c.dataset.toy = data::ToySpec::desk(n_id, 0);
  if (full) {
    c.dataset.toy.train_per_class = 5000;
    c.dataset.toy.test_per_class = 1000;
  }
  c.network.hidden = {{32, nn::Activation::relu, 0.0}};
  c.probe.trials = 5;
  c.analysis.hull = false;
  c.analysis.distances = false;
  return c;
}

ExperimentConfig ExperimentConfig::mnist_preset(const std::string& mnist_dir, int first_width, bool full) {
  ExperimentConfig c;
  c.name = "mnist-mlp" + std::to_string(first_width);
  c.dataset.kind = DatasetKind::mnist;
  c.dataset.mnist_dir = mnist_dir;
  c.dataset.train_limit = full ? 0 : 10000;
  c.dataset.test_limit = full ? 0 : 2000;
  c.network.hidden = {{first_width, nn::Activation::relu, 0.2},
                      {256, nn::Activation::relu, 0.4},
                      {128, nn::Activation::relu, 0.5}};
  c.probe.trials = 3;
  c.analysis.distance_bottleneck = 16;
  return c;
}

TrialSeeds trial_seeds(std::uint64_t seed, int trial) {
  const auto t = static_cast<std::uint64_t>(trial);
  return {tag_seed(seed, "data", {t}), tag_seed(seed, "init", {t}), tag_seed(seed, "train", {t}),
          tag_seed(seed, "probe", {t}), tag_seed(seed, "hull", {t})};
}

// --- pipeline ------------------------------------------------------------------------

namespace {

struct TrialSpaces {
  nn::Network frozen;
  data::ActivationSet train;
  data::ActivationSet test;
};

TrialSpaces trained_spaces(const ExperimentConfig& config, const Dataset& data, const TrialSeeds& seeds,
                           TrialBase& base, const Logger& log) {
  std::vector<nn::LayerSpec> layers = config.network.hidden;
  layers.push_back({data.n_classes, nn::Activation::softmax, 0.0});
  const int tap = config.network.tap_index < 0 ? static_cast<int>(config.network.hidden.size()) - 1
                                               : config.network.tap_index;
  auto net = nn::Network::create(static_cast<int>(data.dim()), std::move(layers), tap, seeds.init);
  nn::TrainConfig cfg = config.network.train;
  cfg.seed = seeds.train;
  cfg.loss = nn::Loss::cross_entropy;
  auto trained = nn::train(std::move(net), data, cfg);
  trained.network.freeze();
  const auto train_eval = nn::evaluate(trained.network, data.train_features, data.train_labels);
  const auto test_eval = nn::evaluate(trained.network, data.test_features, data.test_labels);
  base.train_accuracy = train_eval.accuracy;
  base.test_accuracy = test_eval.accuracy;
  base.final_loss = trained.history.empty() ? 0.0 : trained.history.back().loss;
  base.network_checksum = trained.network.checksum();
  if (log)
    log("trial " + std::to_string(base.trial) + ": base network test accuracy " +
        report::format_number(test_eval.accuracy));
  auto train_set = data::ActivationSet::make(nn::tap_activations(trained.network, data.train_features),
                                             data.train_labels, train_eval.predicted, data.n_classes,
                                             data::Split::train, "trial " + std::to_string(base.trial));
  auto test_set = data::ActivationSet::make(nn::tap_activations(trained.network, data.test_features),
                                            data.test_labels, test_eval.predicted, data.n_classes, data::Split::test,
                                            "trial " + std::to_string(base.trial));
  base.n_classes = data.n_classes;
  base.train_labels = train_set.labels;
  base.train_predictions = train_set.base_predictions;
  base.test_labels = test_set.labels;
  base.test_predictions = test_set.base_predictions;
  return {std::move(trained.network), std::move(train_set), std::move(test_set)};
}

stats::DistanceReport distance_report(const ExperimentConfig& config, const std::string& space, int trial,
                                      const Matrix& train, const Matrix& test, const data::ActivationSet& train_acts,
                                      const data::ActivationSet& test_acts, Flags correct) {
  stats::DistanceReport rep;
  rep.space = space;
  rep.trial = trial;
  rep.correct = std::move(correct);
  for (auto metric : config.analysis.metrics)
    rep.distances[metric] = stats::nn_distance(test, train, metric, train_acts.labels, test_acts.labels, config.jobs);
  return rep;
}

}  // namespace

void analyse_distances(const ExperimentConfig& config, const stats::DistanceReport& rep, ExperimentResult& out,
                       const Logger& log) {
  for (auto metric : config.analysis.metrics) {
    const auto& d = rep.distances.at(metric);
    if (static_cast<long>(d.size()) >= config.analysis.n_bins)
      out.bins.push_back({rep.space, metric, rep.trial, stats::binned_accuracy(d, rep.correct, config.analysis.n_bins)});
    const auto [ok, bad] = stats::split_by_correctness(d, rep.correct);
    if (!ok.empty() && !bad.empty()) out.ks.push_back({rep.space, metric, rep.trial, stats::ks_statistic(ok, bad)});
    if (rep.in_hull) {
      try {
        out.logistic.push_back({rep.space, metric, rep.trial, stats::logistic_fit(d, *rep.in_hull, rep.correct)});
      } catch (const ValidationError& e) {
        if (log) log("skipping logistic fit (" + rep.space + ", " + stats::to_string(metric) + "): " + e.what());
      }
    }
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Logger& log) {
  config.validate();
  ExperimentResult out;
  out.config = config;
  const auto& bottlenecks = config.probe.bottlenecks;
  out.distance_bottleneck = config.analysis.distance_bottleneck != 0
                                ? config.analysis.distance_bottleneck
                                : *std::max_element(bottlenecks.begin(), bottlenecks.end());
  std::vector<int> hull_widths = config.analysis.hull_bottlenecks.empty() ? bottlenecks : config.analysis.hull_bottlenecks;
  std::sort(hull_widths.begin(), hull_widths.end());
  if (!config.analysis.hull) hull_widths.clear();

  std::optional<Dataset> shared;
  std::optional<TrialSpaces> dumped;
  if (config.dataset.kind == DatasetKind::mnist) {
    shared = data::load_mnist(data::MnistPaths::in_directory(config.dataset.mnist_dir), config.dataset.train_limit,
                              config.dataset.test_limit);
    if (log)
      log("loaded MNIST: " + std::to_string(shared->train_features.rows()) + " train / " +
          std::to_string(shared->test_features.rows()) + " test");
  } else if (config.dataset.kind == DatasetKind::activations) {
    auto head = nn::load_network(config.dataset.head_network);
    head.freeze();
    dumped = TrialSpaces{std::move(head), data::load_activations(config.dataset.train_activations),
                         data::load_activations(config.dataset.test_activations)};
    if (dumped->train.dim() != dumped->test.dim())
      throw DimensionError("activation dumps: train vs test width", dumped->train.dim(), dumped->test.dim());
    for (int b : bottlenecks)
      if (b >= dumped->train.dim())
        throw ValidationError("probe.bottlenecks: width " + std::to_string(b) + " is not below the activation width");
  }

  for (int t = 0; t < config.probe.trials; ++t) {
    const auto seeds = trial_seeds(config.seed, t);
    TrialBase base;
    base.trial = t;
    std::optional<TrialSpaces> spaces;
    if (config.dataset.kind == DatasetKind::toy) {
      auto spec = config.dataset.toy;
      spec.seed = seeds.data;
      const auto task = data::make_toy_task(spec);
      base.sigma = task.sigma;
      spaces = trained_spaces(config, task.data, seeds, base, log);
    } else if (config.dataset.kind == DatasetKind::mnist) {
      spaces = trained_spaces(config, *shared, seeds, base, log);
    } else {
      spaces = *dumped;
      base.train_accuracy = spaces->train.base_accuracy;
      base.test_accuracy = spaces->test.base_accuracy;
      base.network_checksum = spaces->frozen.checksum();
      base.n_classes = spaces->train.n_classes;
      base.train_labels = spaces->train.labels;
      base.train_predictions = spaces->train.base_predictions;
      base.test_labels = spaces->test.labels;
      base.test_predictions = spaces->test.base_predictions;
    }
    out.base.push_back(base);

    probe::SweepConfig sweep;
    sweep.bottlenecks = bottlenecks;
    sweep.trials = 1;
    sweep.trial_offset = t;
    sweep.seed = seeds.probe;
    sweep.hidden_width = config.probe.hidden_width;
    sweep.schedule = config.probe.schedule;
    sweep.jobs = config.jobs;
    auto probes = probe::probe_sweep(spaces->frozen, spaces->train, spaces->test, sweep);
    if (log)
      for (const auto& p : probes)
        log("trial " + std::to_string(t) + ": bottleneck " + std::to_string(p.bottleneck) + " relative accuracy " +
            report::format_number(p.relative_accuracy));

    auto latent_of = [&](int b) -> const probe::ProbeResult& {
      for (const auto& p : probes)
        if (p.bottleneck == b) return p;
      throw ValidationError("no probe for bottleneck " + std::to_string(b));
    };

    const bool need_latent_hull = config.analysis.distances && config.analysis.hull;
    std::vector<int> widths = hull_widths;
    if (need_latent_hull && std::find(widths.begin(), widths.end(), out.distance_bottleneck) == widths.end())
      widths.push_back(out.distance_bottleneck);
    std::optional<Flags> distance_hull;
    for (int b : widths) {
      const auto& p = latent_of(b);
      hull::HullFractionOptions ho;
      ho.tolerance = config.analysis.hull_tolerance;
      ho.jobs = config.jobs;
      ho.max_generators = config.analysis.hull_max_generators;
      ho.subsample_seed = seeds.hull;
      auto hf = hull::hull_fraction(p.latent_test, p.latent_train, ho);
      if (log)
        log("trial " + std::to_string(t) + ": bottleneck " + std::to_string(b) + " hull fraction " +
            report::format_number(hf.fraction));
      if (b == out.distance_bottleneck) distance_hull = hf.inside;
      if (std::find(hull_widths.begin(), hull_widths.end(), b) != hull_widths.end())
        out.hull.push_back({b, t, hf.fraction, hf.generators_used, std::move(hf.certificates)});
    }

    if (config.analysis.distances) {
      auto neural = distance_report(config, "neural", t, spaces->train.activations, spaces->test.activations,
                                    spaces->train, spaces->test, spaces->test.base_correct());
      const auto& p = latent_of(out.distance_bottleneck);
      auto latent = distance_report(config, "latent", t, p.latent_train, p.latent_test, spaces->train, spaces->test,
                                    p.hybrid_correct);
      latent.in_hull = distance_hull;
      analyse_distances(config, neural, out, log);
      analyse_distances(config, latent, out, log);
      out.distances.push_back(std::move(neural));
      out.distances.push_back(std::move(latent));
    }

    for (auto& p : probes) out.probe.push_back(std::move(p));
  }
  return out;
}

// --- summaries -------------------------------------------------------------------------

namespace {

Summary summarise(const std::vector<double>& values, std::uint64_t seed, int resamples) {
  Summary s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) {
    s.mean = std::nan("");
    s.ci = {std::nan(""), std::nan("")};
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.ci = stats::bootstrap_ci(values, resamples, 0.95, seed);
  return s;
}

}  // namespace

std::map<int, Summary> ExperimentResult::relative_accuracy() const {
  std::map<int, std::vector<double>> by;
  for (const auto& p : probe) by[p.bottleneck].push_back(p.relative_accuracy);
  std::map<int, Summary> out;
  for (const auto& [b, v] : by)
    out[b] = summarise(v, derive_seed(config.seed, "bootstrap-relative-accuracy", {static_cast<std::uint64_t>(b)}),
                       config.analysis.bootstrap_resamples);
  return out;
}

std::map<int, Summary> ExperimentResult::hull_fraction() const {
  std::map<int, std::vector<double>> by;
  for (const auto& h : hull) by[h.bottleneck].push_back(h.fraction);
  std::map<int, Summary> out;
  for (const auto& [b, v] : by)
    out[b] = summarise(v, derive_seed(config.seed, "bootstrap-hull-fraction", {static_cast<std::uint64_t>(b)}),
                       config.analysis.bootstrap_resamples);
  return out;
}

Summary ExperimentResult::ks_summary(const std::string& space, stats::Metric metric) const {
  std::vector<double> v;
  for (const auto& k : ks)
    if (k.space == space && k.metric == metric) v.push_back(k.ks.statistic);
  return summarise(v, derive_seed(config.seed, "bootstrap-ks", {fnv1a(space), static_cast<std::uint64_t>(metric)}),
                   config.analysis.bootstrap_resamples);
}

std::map<std::string, report::Table> ExperimentResult::tables() const {
  using report::cell;
  std::map<std::string, report::Table> t;

  report::Table base_t({"trial", "train_accuracy", "test_accuracy", "final_loss", "sigma", "network_checksum"});
  for (const auto& b : base) {
    char hex[20];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(b.network_checksum));
    base_t.add_row({cell(b.trial), cell(b.train_accuracy), cell(b.test_accuracy), cell(b.final_loss),
                    b.sigma ? cell(*b.sigma) : std::string(), hex});
  }
  t["base.csv"] = std::move(base_t);

  report::Table probe_t({"bottleneck", "trial", "mse_train", "mse_test", "base_acc", "hybrid_acc", "rel_acc"});
  for (const auto& p : probe)
    probe_t.add_row({cell(p.bottleneck), cell(p.trial), cell(p.mse_train), cell(p.mse_test), cell(p.base_accuracy),
                     cell(p.hybrid_accuracy), cell(p.relative_accuracy)});
  t["probe.csv"] = std::move(probe_t);

  report::Table probe_s({"bottleneck", "mean_rel_acc", "ci_low", "ci_high", "trials"});
  for (const auto& [b, s] : relative_accuracy())
    probe_s.add_row({cell(b), cell(s.mean), cell(s.ci.low), cell(s.ci.high), cell(s.n)});
  t["probe_summary.csv"] = std::move(probe_s);

  if (!hull.empty()) {
    report::Table hull_t({"bottleneck", "trial", "fraction", "generators_used"});
    report::Table samples({"bottleneck", "trial", "sample_id", "inside", "residual", "iterations"});
    for (const auto& h : hull) {
      hull_t.add_row({cell(h.bottleneck), cell(h.trial), cell(h.fraction), cell(h.generators_used)});
      for (std::size_t i = 0; i < h.certificates.size(); ++i)
        samples.add_row({cell(h.bottleneck), cell(h.trial), cell(i), cell(h.certificates[i].inside),
                         cell(h.certificates[i].residual), cell(h.certificates[i].iterations)});
    }
    t["hull.csv"] = std::move(hull_t);
    t["hull_samples.csv"] = std::move(samples);
    report::Table hull_s({"bottleneck", "mean_fraction", "ci_low", "ci_high", "trials"});
    for (const auto& [b, s] : hull_fraction())
      hull_s.add_row({cell(b), cell(s.mean), cell(s.ci.low), cell(s.ci.high), cell(s.n)});
    t["hull_summary.csv"] = std::move(hull_s);
  }

  if (!distances.empty()) {
    std::vector<std::string> cols = {"space", "trial", "sample_id", "correct", "in_hull"};
    for (auto m : config.analysis.metrics) cols.push_back(stats::to_string(m));
    report::Table dist_t(cols);
    for (const auto& rep : distances)
      for (long i = 0; i < rep.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        std::vector<std::string> row = {rep.space, cell(rep.trial), cell(i), cell(rep.correct[k] != 0),
                                        rep.in_hull ? cell((*rep.in_hull)[k] != 0) : std::string()};
        for (auto m : config.analysis.metrics) row.push_back(cell(rep.distances.at(m)[k]));
        dist_t.add_row(std::move(row));
      }
    t["distances.csv"] = std::move(dist_t);

    report::Table bins_t({"space", "metric", "trial", "bin", "mean_distance", "accuracy", "count"});
    for (const auto& b : bins)
      for (std::size_t i = 0; i < b.bins.size(); ++i)
        bins_t.add_row({b.space, stats::to_string(b.metric), cell(b.trial), cell(i), cell(b.bins[i].mean_distance),
                        cell(b.bins[i].accuracy), cell(b.bins[i].count)});
    t["deciles.csv"] = std::move(bins_t);

    report::Table groups({"space", "metric", "correct", "in_hull", "mean_distance", "count"});
    for (const std::string space : {"neural", "latent"}) {
      std::vector<stats::DistanceReport> reps;
      for (const auto& r : distances)
        if (r.space == space && r.in_hull) reps.push_back(r);
      if (reps.empty()) continue;
      for (auto m : config.analysis.metrics)
        for (const auto& g : stats::correctness_by_hull_table(reps, m))
          groups.add_row({space, stats::to_string(m), cell(g.correct), cell(g.in_hull), cell(g.mean_distance),
                          cell(g.count)});
    }
    t["groups.csv"] = std::move(groups);

    report::Table logit({"space", "metric", "trial", "term", "coefficient", "std_error", "z_value", "identified",
                         "converged", "iterations"});
    for (const auto& l : logistic)
      for (std::size_t k = 0; k < stats::kLogisticTerms.size(); ++k)
        logit.add_row({l.space, stats::to_string(l.metric), cell(l.trial), stats::kLogisticTerms[k],
                       cell(l.fit.coefficients[k]), cell(l.fit.standard_errors[k]), cell(l.fit.z_values[k]),
                       cell(l.fit.identified[k]), cell(l.fit.converged), cell(l.fit.iterations)});
    t["logistic.csv"] = std::move(logit);

    report::Table ks_t({"space", "metric", "trial", "statistic", "n_correct", "n_incorrect"});
    for (const auto& k : ks)
      ks_t.add_row({k.space, stats::to_string(k.metric), cell(k.trial), cell(k.ks.statistic), cell(k.ks.n_a),
                    cell(k.ks.n_b)});
    t["ks.csv"] = std::move(ks_t);

    report::Table ks_s({"space", "metric", "mean", "ci_low", "ci_high", "trials"});
    for (const std::string space : {"neural", "latent"})
      for (auto m : config.analysis.metrics) {
        const auto s = ks_summary(space, m);
        if (s.n == 0) continue;
        ks_s.add_row({space, stats::to_string(m), cell(s.mean), cell(s.ci.low), cell(s.ci.high), cell(s.n)});
      }
    t["ks_summary.csv"] = std::move(ks_s);
  }
  return t;
}

// --- plots -----------------------------------------------------------------------------

namespace {

std::vector<double> column(const report::Table& t, std::string_view name, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  for (auto r : rows) out.push_back(t.number(r, name));
  return out;
}

std::vector<std::size_t> all_rows(const report::Table& t) {
  std::vector<std::size_t> rows(t.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace

std::map<std::string, std::string> render_plots(const std::map<std::string, report::Table>& tables) {
  std::map<std::string, std::string> out;
  if (const auto it = tables.find("probe_summary.csv"); it != tables.end() && it->second.size() > 0) {
    const auto& t = it->second;
    const auto rows = all_rows(t);
    report::Series s{"mean over trials", column(t, "bottleneck", rows), column(t, "mean_rel_acc", rows),
                     column(t, "ci_low", rows), column(t, "ci_high", rows)};
    report::ChartOptions opt;
    opt.title = "Hybrid / base accuracy vs bottleneck width";
    opt.x_label = "bottleneck width";
    opt.y_label = "relative accuracy";
    opt.log2_x = true;
    opt.band = std::make_pair(0.99, 1.01);
    out["plots/relative_accuracy.svg"] = report::line_chart({s}, opt);
  }
  if (const auto it = tables.find("hull_summary.csv"); it != tables.end() && it->second.size() > 0) {
    const auto& t = it->second;
    const auto rows = all_rows(t);
    report::Series s{"mean over trials", column(t, "bottleneck", rows), column(t, "mean_fraction", rows),
                     column(t, "ci_low", rows), column(t, "ci_high", rows)};
    report::ChartOptions opt;
    opt.title = "Test samples inside the training hull";
    opt.x_label = "latent dimension";
    opt.y_label = "fraction inside";
    opt.log2_x = true;
    opt.y_range = std::make_pair(0.0, 1.05);
    out["plots/hull_fraction.svg"] = report::line_chart({s}, opt);
  }
  if (const auto it = tables.find("deciles.csv"); it != tables.end() && it->second.size() > 0) {
    const auto& t = it->second;
    const std::string metric = t.text(0, "metric");
    std::vector<report::Series> series;
    for (const std::string space : {"neural", "latent"}) {
      std::map<long, std::vector<double>> by_bin;
      for (std::size_t r = 0; r < t.size(); ++r)
        if (t.text(r, "space") == space && t.text(r, "metric") == metric)
          by_bin[static_cast<long>(t.number(r, "bin"))].push_back(t.number(r, "accuracy"));
      if (by_bin.empty()) continue;
      report::Series s;
      s.name = space + " space";
      s.dashed = space == "latent";
      for (const auto& [bin, acc] : by_bin) {
        double sum = 0.0;
        for (double a : acc) sum += a;
        s.x.push_back(static_cast<double>(bin + 1));
        s.y.push_back(sum / static_cast<double>(acc.size()));
        s.low.push_back(*std::min_element(acc.begin(), acc.end()));
        s.high.push_back(*std::max_element(acc.begin(), acc.end()));
      }
      series.push_back(std::move(s));
    }
    report::ChartOptions opt;
    opt.title = "Accuracy by distance decile (" + metric + "; whiskers span trials)";
    opt.x_label = "distance decile (1 = closest)";
    opt.y_label = "accuracy";
    out["plots/deciles.svg"] = report::line_chart(series, opt);
  }
  if (const auto it = tables.find("logistic.csv"); it != tables.end() && it->second.size() > 0) {
    const auto& t = it->second;
    const std::string metric = t.text(0, "metric");
    const std::vector<std::string> terms = {"distance", "in_hull", "distance:in_hull"};
    std::map<int, report::Series> by_trial;
    for (std::size_t r = 0; r < t.size(); ++r) {
      if (t.text(r, "metric") != metric) continue;
      const auto term = std::find(terms.begin(), terms.end(), t.text(r, "term"));
      if (term == terms.end()) continue;
      const int trial = static_cast<int>(t.number(r, "trial"));
      auto& s = by_trial[trial];
      s.name = "trial " + std::to_string(trial);
      s.markers_only = true;
      s.x.push_back(static_cast<double>(term - terms.begin()) + 0.08 * (trial % 5 - 2));
      s.y.push_back(t.number(r, "z_value"));
    }
    std::vector<report::Series> series;
    for (auto& [trial, s] : by_trial) series.push_back(std::move(s));
    report::ChartOptions opt;
    opt.title = "Logistic regression z-values (" + metric + ")";
    opt.x_label = "term";
    opt.y_label = "z-value";
    opt.x_categories = terms;
    opt.band = std::make_pair(-1.96, 1.96);
    out["plots/zvalues.svg"] = report::line_chart(series, opt);
  }
  if (const auto it = tables.find("ks_summary.csv"); it != tables.end() && it->second.size() > 0) {
    const auto& t = it->second;
    std::vector<std::string> names;
    std::vector<double> mean, lo, hi;
    for (std::size_t r = 0; r < t.size(); ++r) {
      names.push_back(t.text(r, "space") + "/" + t.text(r, "metric").substr(0, t.text(r, "metric").find('_')));
      mean.push_back(t.number(r, "mean"));
      lo.push_back(t.number(r, "ci_low"));
      hi.push_back(t.number(r, "ci_high"));
    }
    report::ChartOptions opt;
    opt.title = "KS statistic, correct vs incorrect distances";
    opt.y_label = "KS statistic";
    out["plots/ks.svg"] = report::bar_chart(names, mean, lo, hi, opt);
  }
  return out;
}

// --- artifacts -------------------------------------------------------------------------

std::map<std::string, std::string> build_versions() {
  return {{"interprobe", INTERPROBE_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"zlib", zlibVersion()},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
#if defined(__clang__)
          {"compiler", "clang " __clang_version__}
#elif defined(__GNUC__)
          {"compiler", "gcc " __VERSION__}
#else
          {"compiler", "unknown"}
#endif
  };
}

void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir, const std::string& command) {
  std::filesystem::create_directories(dir);
  const auto tables = result.tables();
  for (const auto& [name, table] : tables) report::write_csv(table, dir / name);
  if (result.config.analysis.plots)
    for (const auto& [name, svg] : render_plots(tables)) report::write_text(dir / name, svg);

  if (result.config.analysis.export_latents) {
    for (const auto& p : result.probe) {
      const auto& b = result.base.at(static_cast<std::size_t>(p.trial));
      const std::string stem = "latents/b" + std::to_string(p.bottleneck) + "_t" + std::to_string(p.trial);
      std::filesystem::create_directories(dir / "latents");
      data::dump_activations(data::ActivationSet::make(p.latent_train, b.train_labels, b.train_predictions,
                                                       b.n_classes, data::Split::train, stem),
                             dir / (stem + "_train.nact"));
      data::dump_activations(data::ActivationSet::make(p.latent_test, b.test_labels, b.test_predictions, b.n_classes,
                                                       data::Split::test, stem),
                             dir / (stem + "_test.nact"));
    }
  }

  json summary;
  summary["name"] = result.config.name;
  json rel = json::object();
  for (const auto& [b, s] : result.relative_accuracy())
    rel[std::to_string(b)] = {{"mean", s.mean}, {"ci_low", s.ci.low}, {"ci_high", s.ci.high}, {"trials", s.n}};
  summary["relative_accuracy"] = rel;
  json base = json::array();
  for (const auto& b : result.base) base.push_back({{"trial", b.trial}, {"test_accuracy", b.test_accuracy}});
  summary["base"] = base;
  if (!result.hull.empty()) {
    json hf = json::object();
    for (const auto& [b, s] : result.hull_fraction())
      hf[std::to_string(b)] = {{"mean", s.mean}, {"ci_low", s.ci.low}, {"ci_high", s.ci.high}, {"trials", s.n}};
    summary["hull_fraction"] = hf;
  }
  if (!result.ks.empty()) {
    json ks = json::array();
    for (const std::string space : {"neural", "latent"})
      for (auto m : result.config.analysis.metrics) {
        const auto s = result.ks_summary(space, m);
        if (s.n == 0) continue;
        ks.push_back({{"space", space}, {"metric", stats::to_string(m)}, {"mean", s.mean}, {"ci_low", s.ci.low},
                      {"ci_high", s.ci.high}});
      }
    summary["ks"] = ks;
  }
  summary["distance_bottleneck"] = result.distance_bottleneck;
  report::write_text(dir / "summary.json", summary.dump(2) + "\n");

  json manifest;
  manifest["command"] = command;
  manifest["config"] = json::parse(result.config.to_json());
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(result.config.hash()));
  manifest["config_hash"] = hash;
  json seeds = json::array();
  for (int t = 0; t < result.config.probe.trials; ++t) {
    const auto s = trial_seeds(result.config.seed, t);
    seeds.push_back({{"trial", t}, {"data", s.data}, {"init", s.init}, {"train", s.train}, {"probe", s.probe},
                     {"hull", s.hull}});
  }
  manifest["seeds"] = seeds;
  manifest["versions"] = build_versions();
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(std::filesystem::relative(entry.path(), dir).generic_string());
  std::sort(files.begin(), files.end());
  manifest["files"] = files;
  report::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// --- tuning-curve hull demonstrations ---------------------------------------------

std::vector<Fig1Case> run_fig1(double tolerance) {
  hull::HullFractionOptions opt;
  opt.tolerance = tolerance;
  std::vector<Fig1Case> cases;
  for (auto demo : {data::tuning_demo_1d(), data::tuning_demo_2d()}) {
    Fig1Case c;
    c.intrinsic = hull::hull_fraction(demo.test_intrinsic, demo.train_intrinsic, opt);
    c.embedded = hull::hull_fraction(demo.test_embedded, demo.train_embedded, opt);
    c.demo = std::move(demo);
    cases.push_back(std::move(c));
  }
  return cases;
}

std::map<std::string, report::Table> fig1_tables(const std::vector<Fig1Case>& cases) {
  using report::cell;
  std::map<std::string, report::Table> t;
  long max_intrinsic = 0, max_embedded = 0;
  for (const auto& c : cases) {
    max_intrinsic = std::max(max_intrinsic, c.demo.train_intrinsic.cols());
    max_embedded = std::max(max_embedded, c.demo.train_embedded.cols());
  }
  std::vector<std::string> cols = {"case", "split", "index"};
  for (long k = 0; k < max_intrinsic; ++k) cols.push_back("s" + std::to_string(k));
  for (long k = 0; k < max_embedded; ++k) cols.push_back("r" + std::to_string(k));
  cols.push_back("in_intrinsic_hull");
  cols.push_back("in_embedded_hull");
  report::Table points(cols);
  report::Table summary({"case", "space", "test_points", "inside", "fraction"});
  for (const auto& c : cases) {
    auto emit = [&](const std::string& split, const Matrix& s, const Matrix& r, const Flags* in_s, const Flags* in_r) {
      for (long i = 0; i < s.rows(); ++i) {
        std::vector<std::string> row = {c.demo.name, split, cell(i)};
        for (long k = 0; k < max_intrinsic; ++k) row.push_back(k < s.cols() ? cell(s(i, k)) : std::string());
        for (long k = 0; k < max_embedded; ++k) row.push_back(k < r.cols() ? cell(r(i, k)) : std::string());
        const auto u = static_cast<std::size_t>(i);
        row.push_back(in_s ? cell((*in_s)[u] != 0) : std::string());
        row.push_back(in_r ? cell((*in_r)[u] != 0) : std::string());
        points.add_row(std::move(row));
      }
    };
    emit("train", c.demo.train_intrinsic, c.demo.train_embedded, nullptr, nullptr);
    emit("test", c.demo.test_intrinsic, c.demo.test_embedded, &c.intrinsic.inside, &c.embedded.inside);
    for (const auto& [space, hf] : {std::pair{"intrinsic", &c.intrinsic}, std::pair{"embedded", &c.embedded}}) {
      long inside = 0;
      for (auto f : hf->inside) inside += f;
      summary.add_row({c.demo.name, space, cell(static_cast<long>(hf->inside.size())), cell(inside), cell(hf->fraction)});
    }
  }
  t["fig1_points.csv"] = std::move(points);
  t["fig1_summary.csv"] = std::move(summary);
  return t;
}

std::map<std::string, std::string> fig1_plots(const std::vector<Fig1Case>& cases) {
  std::map<std::string, std::string> out;
  auto scatter = [](const Matrix& m, long cx, long cy, const std::string& name) {
    report::Series s;
    s.name = name;
    s.markers_only = true;
    for (long i = 0; i < m.rows(); ++i) {
      s.x.push_back(m(i, cx));
      s.y.push_back(cy < m.cols() ? m(i, cy) : 0.0);
    }
    return s;
  };
  for (const auto& c : cases) {
    report::ChartOptions opt;
    opt.title = c.demo.name + ": intrinsic space (" + report::format_number(c.intrinsic.fraction * 100.0) +
                "% of test points inside the training hull)";
    opt.x_label = "s0";
    opt.y_label = c.demo.train_intrinsic.cols() > 1 ? "s1" : "";
    out["plots/" + c.demo.name + "_intrinsic.svg"] =
        report::line_chart({scatter(c.demo.train_intrinsic, 0, 1, "train"), scatter(c.demo.test_intrinsic, 0, 1, "test")},
                           opt);
    // Embedded responses: one panel per neuron pair.
    const long n = c.demo.train_embedded.cols();
    for (long a = 0; a < n; ++a)
      for (long b = a + 1; b < n; ++b) {
        report::ChartOptions e;
        e.title = c.demo.name + ": neurons " + std::to_string(a) + " and " + std::to_string(b) + " (" +
                  report::format_number(c.embedded.fraction * 100.0) + "% of test points inside the training hull)";
        e.x_label = "response r" + std::to_string(a);
        e.y_label = "response r" + std::to_string(b);
        out["plots/" + c.demo.name + "_embedded_r" + std::to_string(a) + "r" + std::to_string(b) + ".svg"] =
            report::line_chart(
                {scatter(c.demo.train_embedded, a, b, "train"), scatter(c.demo.test_embedded, a, b, "test")}, e);
      }
  }
  return out;
}

}  // namespace interprobe::experiment
