// Command-line front end: dataset generation, training, probing, hull and
// distance analyses, and full experiment runs with file artifacts.

#include "interprobe/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace interprobe;
using experiment::ExperimentConfig;
using nlohmann::json;

namespace {

void log_line(const std::string& msg) { std::cerr << "[interprobe] " << msg << '\n'; }

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Stages every write of a command into `<out>.partial` and moves it into place
// when the command finishes. A failed command still moves its partial tree,
// marked by a FAILED file.
class Output {
 public:
  Output(fs::path out, bool force) : out_(std::move(out)), partial_(out_.string() + ".partial") {
    if (out_.empty()) throw ValidationError("--out: an output directory is required");
    if (fs::exists(out_) && !force)
      throw ValidationError("--out: " + out_.string() + " already exists (pass --force to overwrite)");
    fs::remove_all(partial_);
    fs::create_directories(partial_);
  }

  const fs::path& dir() const { return partial_; }
  fs::path operator/(const std::string& name) const { return partial_ / name; }

  void commit() { swap_in(); }

  void fail(const std::string& message) {
    std::ofstream(partial_ / "FAILED", std::ios::trunc) << message << '\n';
    swap_in();
  }

 private:
  void swap_in() {
    const fs::path old = out_.string() + ".old";
    fs::remove_all(old);
    if (fs::exists(out_)) fs::rename(out_, old);
    fs::rename(partial_, out_);
    fs::remove_all(old);
  }

  fs::path out_;
  fs::path partial_;
};

struct Shared {
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 1;
  std::string config;
  bool full = false;
  bool force = false;
};

void add_shared(CLI::App* cmd, Shared& s, bool needs_out = true) {
  cmd->add_option("--seed", s.seed, "Master seed");
  auto* out = cmd->add_option("--out", s.out, "Output directory");
  if (needs_out) out->required();
  cmd->add_option("--jobs", s.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--config", s.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_flag("--full", s.full, "Full-scale dataset sizes");
  cmd->add_flag("--force", s.force, "Overwrite an existing output directory");
}

bool given(const CLI::App* cmd, const std::string& flag) { return cmd->count(flag) > 0; }

// Flags override config fields, which override defaults.
ExperimentConfig base_config(const CLI::App* cmd, const Shared& s, ExperimentConfig defaults) {
  ExperimentConfig c = s.config.empty() ? std::move(defaults) : ExperimentConfig::load(s.config);
  if (given(cmd, "--seed")) c.seed = s.seed;
  if (given(cmd, "--jobs")) c.jobs = s.jobs;
  if (s.full) {
    c.dataset.toy.train_per_class = 5000;
    c.dataset.toy.test_per_class = 1000;
    c.dataset.train_limit = 0;
    c.dataset.test_limit = 0;
  }
  return c;
}

// The invocation minus the program path and output directory, so reruns into
// different directories write identical manifests.
std::string command_line(int argc, char** argv) {
  std::string s = "interprobe";
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--out") {
      ++i;
      continue;
    }
    if (arg.starts_with("--out=")) continue;
    s += " " + std::string(arg);
  }
  return s;
}

void write_manifest(const Output& out, const std::string& command, const std::string& subcommand, json extra) {
  json m = std::move(extra);
  m["command"] = command;
  m["subcommand"] = subcommand;
  m["versions"] = experiment::build_versions();
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(out.dir()))
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), out.dir()).generic_string());
  std::sort(files.begin(), files.end());
  m["files"] = files;
  report::write_text(out / "manifest.json", m.dump(2) + "\n");
}

void write_tables(const Output& out, const std::map<std::string, report::Table>& tables,
                  const std::vector<std::string>& only = {}) {
  for (const auto& [name, table] : tables)
    if (only.empty() || std::find(only.begin(), only.end(), name) != only.end())
      report::write_csv(table, out / name);
}

/// Training data for `train` and `dump-acts`: a saved dataset directory, an
/// MNIST directory, or the config's dataset (toy tasks drawn from trial 0's
/// data seed, as `run` does).
Dataset resolve_dataset(const std::string& data_dir, const std::string& mnist_dir, const ExperimentConfig& c) {
  if (!data_dir.empty()) return data::load_dataset(data_dir);
  if (!mnist_dir.empty())
    return data::load_mnist(data::MnistPaths::in_directory(mnist_dir), c.dataset.train_limit, c.dataset.test_limit);
  switch (c.dataset.kind) {
    case experiment::DatasetKind::toy: {
      auto spec = c.dataset.toy;
      spec.seed = experiment::trial_seeds(c.seed, 0).data;
      return data::make_toy_task(spec).data;
    }
    case experiment::DatasetKind::mnist:
      return data::load_mnist(data::MnistPaths::in_directory(c.dataset.mnist_dir), c.dataset.train_limit,
                              c.dataset.test_limit);
    case experiment::DatasetKind::activations:
      break;
  }
  throw ValidationError("train: an activation-dump dataset cannot be used to train a classifier");
}

std::vector<nn::LayerSpec> hidden_layers(const std::vector<int>& widths, const std::vector<double>& dropout,
                                         const std::vector<nn::LayerSpec>& fallback) {
  if (widths.empty()) return fallback;
  if (!dropout.empty() && dropout.size() != widths.size())
    throw ValidationError("--dropout: give one rate per hidden layer");
  std::vector<nn::LayerSpec> layers;
  for (std::size_t i = 0; i < widths.size(); ++i)
    layers.push_back({widths[i], nn::Activation::relu, dropout.empty() ? 0.0 : dropout[i]});
  return layers;
}

std::string markdown_table(const report::Table& t) {
  std::ostringstream s;
  s << "|";
  for (const auto& c : t.columns()) s << ' ' << c << " |";
  s << "\n|";
  for (std::size_t i = 0; i < t.columns().size(); ++i) s << " --- |";
  s << '\n';
  for (const auto& row : t.rows()) {
    s << "|";
    for (const auto& c : row) s << ' ' << c << " |";
    s << '\n';
  }
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space interpolation probes for trained classifiers"};
  app.require_subcommand(1);
  const std::string command = command_line(argc, argv);

  // gen-toy
  Shared gen_s;
  int n_id = 4, n_input = 32, n_classes = 10, train_pc = 1000, test_pc = 200;
  double sigma = 0.0, target = 0.70;
  auto* gen = app.add_subcommand("gen-toy", "Generate a Gaussian task with a given intrinsic dimension");
  add_shared(gen, gen_s);
  gen->add_option("--n-id", n_id, "Intrinsic dimension");
  gen->add_option("--n-input", n_input, "Ambient dimension");
  gen->add_option("--n-classes", n_classes, "Number of classes");
  gen->add_option("--train-per-class", train_pc, "Training samples per class");
  gen->add_option("--test-per-class", test_pc, "Test samples per class");
  gen->add_option("--sigma", sigma, "Noise level (calibrated when omitted)");
  gen->add_option("--target-accuracy", target, "Nearest-centroid accuracy targeted by calibration");

  // train
  Shared train_s;
  std::string data_dir, mnist_dir;
  std::vector<int> widths;
  std::vector<double> dropout;
  int tap = -2, epochs = 0;
  auto* train = app.add_subcommand("train", "Train a classifier");
  add_shared(train, train_s);
  train->add_option("--data", data_dir, "Dataset directory written by gen-toy")->check(CLI::ExistingDirectory);
  train->add_option("--mnist-dir", mnist_dir, "Directory holding MNIST IDX files")->check(CLI::ExistingDirectory);
  train->add_option("--hidden", widths, "Hidden layer widths")->delimiter(',');
  train->add_option("--dropout", dropout, "Dropout rate per hidden layer")->delimiter(',');
  train->add_option("--tap", tap, "Hidden layer whose activations are probed (-1: last)");
  train->add_option("--epochs", epochs, "Training epochs");

  // dump-acts
  Shared dump_s;
  std::string network_path, dump_data, dump_mnist;
  auto* dump = app.add_subcommand("dump-acts", "Write tap-layer activations of a trained network");
  add_shared(dump, dump_s);
  dump->add_option("--network", network_path, "Network file written by train")->required()->check(CLI::ExistingFile);
  dump->add_option("--data", dump_data, "Dataset directory")->check(CLI::ExistingDirectory);
  dump->add_option("--mnist-dir", dump_mnist, "Directory holding MNIST IDX files")->check(CLI::ExistingDirectory);

  // probe
  Shared probe_s;
  std::string train_acts, test_acts, head;
  std::vector<int> bottlenecks;
  int trials = 0;
  bool export_latents = false;
  auto* probe_cmd = app.add_subcommand("probe", "Fit bottleneck autoencoders to activation dumps");
  add_shared(probe_cmd, probe_s);
  probe_cmd->add_option("--train-acts", train_acts, "Training activations (NACT)")->check(CLI::ExistingFile);
  probe_cmd->add_option("--test-acts", test_acts, "Test activations (NACT)")->check(CLI::ExistingFile);
  probe_cmd->add_option("--head", head, "Layers after the tap (written by dump-acts)")->check(CLI::ExistingFile);
  probe_cmd->add_option("--bottlenecks", bottlenecks, "Bottleneck widths")->delimiter(',');
  probe_cmd->add_option("--trials", trials, "Autoencoders per bottleneck");
  probe_cmd->add_flag("--export-latents", export_latents, "Write latent codes as NACT files");

  // hull
  Shared hull_s;
  std::string hull_train, hull_test;
  double tolerance = 1e-6;
  long max_generators = 0;
  auto* hull_cmd = app.add_subcommand("hull", "Convex-hull membership of test points");
  add_shared(hull_cmd, hull_s);
  hull_cmd->add_option("--train", hull_train, "Generators (NACT)")->required()->check(CLI::ExistingFile);
  hull_cmd->add_option("--test", hull_test, "Queries (NACT)")->required()->check(CLI::ExistingFile);
  hull_cmd->add_option("--tolerance", tolerance, "Feasibility tolerance");
  hull_cmd->add_option("--max-generators", max_generators, "Uniformly subsample the generators (0 keeps all)");

  // dist
  Shared dist_s;
  std::string dist_train, dist_test, space = "latent";
  std::vector<std::string> metrics;
  int n_bins = 10, resamples = 1000;
  bool with_hull = false;
  auto* dist = app.add_subcommand("dist", "Nearest-neighbour distances versus correctness");
  add_shared(dist, dist_s);
  dist->add_option("--train", dist_train, "Reference activations (NACT)")->required()->check(CLI::ExistingFile);
  dist->add_option("--test", dist_test, "Query activations (NACT)")->required()->check(CLI::ExistingFile);
  dist->add_option("--metrics", metrics, "euclidean_nn, cosine_nn, class_conditional_nn")->delimiter(',');
  dist->add_option("--bins", n_bins, "Equal-count distance bins");
  dist->add_option("--resamples", resamples, "Bootstrap resamples");
  dist->add_option("--space", space, "Space tag written to the tables");
  dist->add_flag("--hull", with_hull, "Also test hull membership and fit the logistic model");

  // fig1
  Shared fig1_s;
  auto* fig1 = app.add_subcommand("fig1", "Tuning-curve demonstration of intrinsic vs embedded hulls");
  add_shared(fig1, fig1_s);

  // run
  Shared run_s;
  std::string preset = "toy", run_mnist = INTERPROBE_DEFAULT_MNIST_DIR, name;
  int run_nid = 4, first_width = 256, run_trials = 0;
  std::vector<int> run_bottlenecks;
  bool run_latents = false, no_plots = false;
  auto* run = app.add_subcommand("run", "Full experiment: train, probe, hull, distances, plots");
  add_shared(run, run_s);
  run->add_option("--preset", preset, "toy or mnist (ignored with --config)")
      ->check(CLI::IsMember({"toy", "mnist"}));
  run->add_option("--n-id", run_nid, "Toy preset intrinsic dimension");
  run->add_option("--mnist-dir", run_mnist, "MNIST preset data directory");
  run->add_option("--first-width", first_width, "MNIST preset first hidden width");
  run->add_option("--trials", run_trials, "Trials");
  run->add_option("--bottlenecks", run_bottlenecks, "Bottleneck widths")->delimiter(',');
  run->add_option("--name", name, "Experiment name");
  run->add_flag("--export-latents", run_latents, "Write latent codes as NACT files");
  run->add_flag("--no-plots", no_plots, "Skip SVG output");

  // report
  Shared report_s;
  std::string report_in;
  auto* report_cmd = app.add_subcommand("report", "Re-render plots and a markdown summary from a run directory");
  add_shared(report_cmd, report_s);
  report_cmd->add_option("--in", report_in, "Run output directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::optional<Output> out;
  try {
    if (gen->parsed()) {
      ExperimentConfig defaults;
      defaults.dataset.toy = data::ToySpec::desk(n_id, 0);
      auto c = base_config(gen, gen_s, defaults);
      auto spec = c.dataset.toy;
      if (given(gen, "--n-id")) spec.n_id = n_id;
      if (given(gen, "--n-input")) spec.n_input = n_input;
      if (given(gen, "--n-classes")) spec.n_classes = n_classes;
      if (given(gen, "--train-per-class")) spec.train_per_class = train_pc;
      if (given(gen, "--test-per-class")) spec.test_per_class = test_pc;
      if (given(gen, "--sigma")) spec.sigma = sigma;
      if (given(gen, "--target-accuracy")) spec.target_accuracy = target;
      spec.seed = c.seed;
      spec.validate();
      out.emplace(gen_s.out, gen_s.force);
      log_line("generating toy task (n_id " + std::to_string(spec.n_id) + ", n_input " + std::to_string(spec.n_input) +
               ")");
      const auto task = data::make_toy_task(spec);
      data::save_dataset(task.data, out->dir());
      log_line("sigma " + report::format_number(task.sigma));
      write_manifest(*out, command, "gen-toy",
                     {{"seed", spec.seed}, {"sigma", task.sigma}, {"target_accuracy", spec.target_accuracy}});
    } else if (train->parsed()) {
      auto c = base_config(train, train_s, ExperimentConfig{});
      c.network.hidden = hidden_layers(widths, dropout, c.network.hidden);
      if (tap != -2) c.network.tap_index = tap;
      if (epochs > 0) c.network.train.epochs = epochs;
      c.validate_training();
      out.emplace(train_s.out, train_s.force);
      const auto data = resolve_dataset(data_dir, mnist_dir, c);
      const auto seeds = experiment::trial_seeds(c.seed, 0);
      auto layers = c.network.hidden;
      layers.push_back({data.n_classes, nn::Activation::softmax, 0.0});
      const int tap_layer =
          c.network.tap_index < 0 ? static_cast<int>(c.network.hidden.size()) - 1 : c.network.tap_index;
      auto net = nn::Network::create(static_cast<int>(data.dim()), layers, tap_layer, seeds.init);
      auto cfg = c.network.train;
      cfg.seed = seeds.train;
      log_line("training " + std::to_string(cfg.epochs) + " epochs on " + std::to_string(data.train_features.rows()) +
               " samples");
      auto trained = nn::train(std::move(net), data, cfg);
      trained.network.freeze();
      const auto tr = nn::evaluate(trained.network, data.train_features, data.train_labels);
      const auto te = nn::evaluate(trained.network, data.test_features, data.test_labels);
      log_line("test accuracy " + report::format_number(te.accuracy));
      nn::save_network(trained.network, out->dir() / "network.bin");
      report::Table hist({"epoch", "loss", "accuracy"});
      for (std::size_t e = 0; e < trained.history.size(); ++e)
        hist.add_row({report::cell(e + 1), report::cell(trained.history[e].loss),
                      report::cell(trained.history[e].accuracy)});
      report::write_csv(hist, out->dir() / "history.csv");
      report::Table acc({"split", "accuracy"});
      acc.add_row({"train", report::cell(tr.accuracy)});
      acc.add_row({"test", report::cell(te.accuracy)});
      report::write_csv(acc, out->dir() / "accuracy.csv");
      write_manifest(*out, command, "train",
                     {{"config", json::parse(c.to_json())},
                      {"config_hash", hex64(c.hash())},
                      {"init_seed", seeds.init},
                      {"train_seed", seeds.train},
                      {"network_checksum", hex64(trained.network.checksum())}});
    } else if (dump->parsed()) {
      auto c = base_config(dump, dump_s, ExperimentConfig{});
      out.emplace(dump_s.out, dump_s.force);
      auto net = nn::load_network(network_path);
      net.freeze();
      const auto data = resolve_dataset(dump_data, dump_mnist, c);
      for (const auto& [split, x, y] :
           {std::tuple{data::Split::train, &data.train_features, &data.train_labels},
            std::tuple{data::Split::test, &data.test_features, &data.test_labels}}) {
        const auto eval = nn::evaluate(net, *x, *y);
        const auto set = data::ActivationSet::make(nn::tap_activations(net, *x), *y, eval.predicted, data.n_classes,
                                                   split, network_path);
        const std::string file = split == data::Split::train ? "train.nact" : "test.nact";
        data::dump_activations(set, out->dir() / file);
        log_line(file + ": " + std::to_string(set.size()) + " x " + std::to_string(set.dim()) + ", base accuracy " +
                 report::format_number(set.base_accuracy));
      }
      nn::save_network(nn::head_network(net), out->dir() / "head.bin");
      write_manifest(*out, command, "dump-acts", {{"network_checksum", hex64(net.checksum())}});
    } else if (probe_cmd->parsed()) {
      ExperimentConfig defaults;
      defaults.dataset.kind = experiment::DatasetKind::activations;
      auto c = base_config(probe_cmd, probe_s, defaults);
      if (!train_acts.empty()) c.dataset.train_activations = train_acts;
      if (!test_acts.empty()) c.dataset.test_activations = test_acts;
      if (!head.empty()) c.dataset.head_network = head;
      c.dataset.kind = experiment::DatasetKind::activations;
      if (!bottlenecks.empty()) c.probe.bottlenecks = bottlenecks;
      if (trials > 0) c.probe.trials = trials;
      c.analysis.hull = false;
      c.analysis.distances = false;
      c.analysis.export_latents = c.analysis.export_latents || export_latents;
      c.validate();
      out.emplace(probe_s.out, probe_s.force);
      const auto result = experiment::run_experiment(c, log_line);
      experiment::write_artifacts(result, out->dir(), command);
    } else if (hull_cmd->parsed()) {
      if (!(tolerance > 0.0)) throw ValidationError("--tolerance: must be positive");
      if (max_generators < 0) throw ValidationError("--max-generators: must be nonnegative");
      out.emplace(hull_s.out, hull_s.force);
      const auto tr = data::load_activations(hull_train);
      const auto te = data::load_activations(hull_test);
      hull::HullFractionOptions opt;
      opt.tolerance = tolerance;
      opt.jobs = hull_s.jobs;
      opt.max_generators = max_generators;
      opt.subsample_seed = derive_seed(hull_s.seed, "hull");
      const auto hf = hull::hull_fraction(te.activations, tr.activations, opt);
      log_line("hull fraction " + report::format_number(hf.fraction) + " over " + std::to_string(hf.generators_used) +
               " generators");
      report::Table samples({"sample_id", "inside", "residual", "iterations", "support_size"});
      for (std::size_t i = 0; i < hf.certificates.size(); ++i)
        samples.add_row({report::cell(i), report::cell(hf.certificates[i].inside),
                         report::cell(hf.certificates[i].residual), report::cell(hf.certificates[i].iterations),
                         report::cell(hf.certificates[i].support.size())});
      report::write_csv(samples, out->dir() / "hull_samples.csv");
      report::Table summary({"fraction", "test_points", "generators_used", "generators_available", "subsampled",
                             "tolerance"});
      summary.add_row({report::cell(hf.fraction), report::cell(te.size()), report::cell(hf.generators_used),
                       report::cell(tr.size()), report::cell(hf.generators_used < tr.size()),
                       report::cell(tolerance)});
      report::write_csv(summary, out->dir() / "hull.csv");
      write_manifest(*out, command, "hull",
                     {{"seed", hull_s.seed}, {"subsample_seed", opt.subsample_seed}, {"max_generators", max_generators}});
    } else if (dist->parsed()) {
      ExperimentConfig c;
      c.seed = dist_s.seed;
      c.jobs = dist_s.jobs;
      c.analysis.n_bins = n_bins;
      c.analysis.bootstrap_resamples = resamples;
      if (!metrics.empty()) {
        c.analysis.metrics.clear();
        for (const auto& m : metrics) c.analysis.metrics.push_back(stats::parse_metric(m));
      }
      c.probe.trials = 1;
      c.dataset.kind = experiment::DatasetKind::activations;
      c.dataset.train_activations = dist_train;
      c.dataset.test_activations = dist_test;
      c.dataset.head_network = "-";
      c.validate();
      out.emplace(dist_s.out, dist_s.force);
      const auto tr = data::load_activations(dist_train);
      const auto te = data::load_activations(dist_test);
      experiment::ExperimentResult result;
      result.config = c;
      stats::DistanceReport rep;
      rep.space = space;
      rep.correct = te.base_correct();
      for (auto m : c.analysis.metrics)
        rep.distances[m] = stats::nn_distance(te.activations, tr.activations, m, tr.labels, te.labels, c.jobs);
      if (with_hull) {
        hull::HullFractionOptions opt;
        opt.jobs = c.jobs;
        rep.in_hull = hull::hull_fraction(te.activations, tr.activations, opt).inside;
      }
      experiment::analyse_distances(c, rep, result, log_line);
      result.distances.push_back(std::move(rep));
      auto tables = result.tables();
      for (const char* drop : {"base.csv", "probe.csv", "probe_summary.csv"}) tables.erase(drop);
      write_tables(*out, tables);
      for (const auto& [file, svg] : experiment::render_plots(tables)) report::write_text(out->dir() / file, svg);
      write_manifest(*out, command, "dist", {{"seed", c.seed}, {"space", space}, {"hull", with_hull}});
    } else if (fig1->parsed()) {
      out.emplace(fig1_s.out, fig1_s.force);
      const auto cases = experiment::run_fig1();
      for (const auto& c : cases)
        log_line(c.demo.name + ": intrinsic hull fraction " + report::format_number(c.intrinsic.fraction) +
                 ", embedded hull fraction " + report::format_number(c.embedded.fraction));
      write_tables(*out, experiment::fig1_tables(cases));
      for (const auto& [file, svg] : experiment::fig1_plots(cases)) report::write_text(out->dir() / file, svg);
      write_manifest(*out, command, "fig1", json::object());
    } else if (run->parsed()) {
      const auto defaults = preset == "mnist" ? ExperimentConfig::mnist_preset(run_mnist, first_width, run_s.full)
                                              : ExperimentConfig::toy_preset(run_nid, run_s.full);
      auto c = base_config(run, run_s, defaults);
      if (run_trials > 0) c.probe.trials = run_trials;
      if (!run_bottlenecks.empty()) c.probe.bottlenecks = run_bottlenecks;
      if (!name.empty()) c.name = name;
      if (run_latents) c.analysis.export_latents = true;
      if (no_plots) c.analysis.plots = false;
      c.validate();
      out.emplace(run_s.out, run_s.force);
      log_line("config hash " + hex64(c.hash()));
      const auto result = experiment::run_experiment(c, log_line);
      experiment::write_artifacts(result, out->dir(), command);
    } else if (report_cmd->parsed()) {
      out.emplace(report_s.out, report_s.force);
      std::map<std::string, report::Table> tables;
      for (const auto& entry : fs::directory_iterator(report_in))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
          tables[entry.path().filename().string()] = report::read_csv(entry.path());
      if (tables.empty()) throw ValidationError("--in: no CSV tables in " + report_in);
      for (const auto& [file, svg] : experiment::render_plots(tables)) report::write_text(out->dir() / file, svg);
      std::ostringstream md;
      md << "# Run summary\n\nSource: `" << report_in << "`\n";
      for (const char* t : {"base.csv", "probe_summary.csv", "hull_summary.csv", "ks_summary.csv"})
        if (tables.contains(t)) md << "\n## " << t << "\n\n" << markdown_table(tables.at(t));
      report::write_text(out->dir() / "report.md", md.str());
      std::cout << md.str();
      write_manifest(*out, command, "report", {{"source", report_in}});
    }
    if (out) out->commit();
    return 0;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    if (out) {
      try {
        out->fail(e.what());
      } catch (const std::exception& inner) {
        log_line(std::string("could not record failure: ") + inner.what());
      }
    }
    return dynamic_cast<const ValidationError*>(&e) ? 2 : 1;
  }
}
