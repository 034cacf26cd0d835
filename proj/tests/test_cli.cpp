#include "doctest.h"

#include "interprobe/experiment.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;
using namespace interprobe;
using experiment::ExperimentConfig;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "interprobe-cli-test";

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + INTERPROBE_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return report::read_text(p); }

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  return out;
}

// A toy config small enough to run in a few seconds.
ExperimentConfig tiny_config() {
  auto c = ExperimentConfig::toy_preset(2);
  c.name = "tiny";
  c.dataset.toy.train_per_class = 100;
  c.dataset.toy.test_per_class = 30;
  c.network.train.epochs = 3;
  c.probe.bottlenecks = {1, 2};
  c.probe.trials = 2;
  c.probe.hidden_width = 16;
  c.probe.schedule.epochs = 3;
  c.analysis.hull = true;
  c.analysis.distances = true;
  c.analysis.bootstrap_resamples = 50;
  return c;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kScratch);
  const auto p = kScratch / name;
  std::ofstream(p, std::ios::trunc) << text;
  return p;
}

}  // namespace

TEST_SUITE("cli.config") {
  TEST_CASE("canonical JSON round-trips and validates") {
    const auto c = tiny_config();
    const auto back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.hash() == c.hash());
  }

  TEST_CASE("unknown fields are rejected with their path") {
    auto doc = nlohmann::json::parse(tiny_config().to_json());
    doc["probe"]["bottleneck"] = 4;
    try {
      ExperimentConfig::from_json(doc.dump());
      FAIL("accepted an unknown field");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("probe.bottleneck") != std::string::npos);
    }
    auto top = nlohmann::json::parse(tiny_config().to_json());
    top["extra"] = true;
    CHECK_THROWS_AS(ExperimentConfig::from_json(top.dump()), ValidationError);
    auto nested = nlohmann::json::parse(tiny_config().to_json());
    nested["network"]["hidden"][0]["bias"] = 0;
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(nested.dump()), doctest::Contains("network.hidden[0].bias"),
                         ValidationError);
  }

  TEST_CASE("wrong types, malformed JSON and bad values") {
    auto doc = nlohmann::json::parse(tiny_config().to_json());
    doc["seed"] = "seven";
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(doc.dump()), doctest::Contains("seed"), ValidationError);
    CHECK_THROWS_AS(ExperimentConfig::from_json("{\"name\": "), ValidationError);
    for (const char* bad : {R"({"probe": {"bottlenecks": []}})", R"({"probe": {"bottlenecks": [2, 2]}})",
                            R"({"probe": {"bottlenecks": [32]}})", R"({"analysis": {"metrics": []}})",
                            R"({"analysis": {"metrics": ["manhattan"]}})", R"({"dataset": {"kind": "cifar"}})",
                            R"({"dataset": {"toy": {"n_id": 40}}})", R"({"network": {"tap_index": 3}})",
                            R"({"analysis": {"distance_bottleneck": 5}})", R"({"jobs": 0})"}) {
      CAPTURE(bad);
      CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ValidationError);
    }
    CHECK_NOTHROW(ExperimentConfig::from_json("{}"));
  }

  TEST_CASE("the hash changes with every field") {
    const auto base = tiny_config();
    std::vector<ExperimentConfig> variants(14, base);
    variants[0].name = "other";
    variants[1].seed = 1;
    variants[2].jobs = 2;
    variants[3].dataset.toy.n_id = 1;
    variants[4].dataset.toy.sigma = 0.5;
    variants[5].dataset.mnist_dir = "x";
    variants[6].network.hidden[0].dropout_rate = 0.1;
    variants[7].network.train.learning_rate = 2e-3;
    variants[8].probe.bottlenecks = {1};
    variants[9].probe.schedule.batch_size = 64;
    variants[10].analysis.metrics = {stats::Metric::cosine_nn};
    variants[11].analysis.hull_tolerance = 1e-7;
    variants[12].analysis.plots = false;
    variants[13].dataset.kind = experiment::DatasetKind::mnist;
    std::set<std::uint64_t> hashes = {base.hash()};
    for (const auto& v : variants) hashes.insert(v.hash());
    CHECK(hashes.size() == variants.size() + 1);
    CHECK(ExperimentConfig(base).hash() == base.hash());
  }

  TEST_CASE("trial seeds are distinct streams") {
    const auto a = experiment::trial_seeds(0, 0), b = experiment::trial_seeds(0, 1);
    const std::set<std::uint64_t> all = {a.data, a.init, a.train, a.probe, a.hull, b.data, b.init, b.train, b.probe,
                                         b.hull};
    CHECK(all.size() == 10);
  }
}

TEST_SUITE("cli.commands") {
  TEST_CASE("gen-toy is byte-identical across runs and records the target accuracy") {
    fs::remove_all(kScratch / "g1");
    fs::remove_all(kScratch / "g2");
    REQUIRE(cli("gen-toy --n-id 4 --seed 1 --out " + (kScratch / "g1").string()) == 0);
    REQUIRE(cli("gen-toy --n-id 4 --seed 1 --out " + (kScratch / "g2").string()) == 0);
    CHECK(tree(kScratch / "g1") == tree(kScratch / "g2"));
    const auto meta = nlohmann::json::parse(slurp(kScratch / "g1" / "dataset.json"));
    CHECK(meta["provenance"]["target_accuracy"].get<double>() == 0.70);
    CHECK(meta["n_train"].get<long>() == 10000);
    const auto data = data::load_dataset(kScratch / "g1");
    CHECK(data.test_features.rows() == 2000);
  }

  TEST_CASE("invalid toy spec exits nonzero without writing") {
    fs::remove_all(kScratch / "bad");
    CHECK(cli("gen-toy --n-id 40 --n-input 32 --out " + (kScratch / "bad").string()) != 0);
    CHECK_FALSE(fs::exists(kScratch / "bad"));
    CHECK_FALSE(fs::exists(kScratch / "bad.partial"));
  }

  TEST_CASE("existing output needs --force, which replaces it") {
    const auto out = kScratch / "fig";
    fs::remove_all(out);
    REQUIRE(cli("fig1 --out " + out.string()) == 0);
    std::ofstream(out / "stale.txt") << "old";
    CHECK(cli("fig1 --out " + out.string()) != 0);
    CHECK(fs::exists(out / "stale.txt"));
    REQUIRE(cli("fig1 --force --out " + out.string()) == 0);
    CHECK_FALSE(fs::exists(out / "stale.txt"));
    CHECK_FALSE(fs::exists(kScratch / "fig.partial"));
    const auto summary = report::read_csv(out / "fig1_summary.csv");
    for (std::size_t r = 0; r < summary.size(); ++r)
      CHECK(summary.number(r, "fraction") == (summary.text(r, "space") == "intrinsic" ? 1.0 : 0.0));
    CHECK(fs::exists(out / "plots" / "2d_intrinsic.svg"));
  }

  TEST_CASE("empty bottleneck list fails before any training") {
    const auto cfg = write_config("empty.json", R"({"probe": {"bottlenecks": []}})");
    fs::remove_all(kScratch / "empty");
    CHECK(cli("run --config " + cfg.string() + " --out " + (kScratch / "empty").string()) == 2);
    CHECK_FALSE(fs::exists(kScratch / "empty"));
  }

  TEST_CASE("a failing stage leaves a FAILED marker and exits nonzero") {
    auto c = tiny_config();
    c.dataset.kind = experiment::DatasetKind::mnist;
    c.dataset.mnist_dir = (kScratch / "no-such-dir").string();
    const auto cfg = write_config("broken.json", c.to_json());
    const auto out = kScratch / "broken";
    fs::remove_all(out);
    CHECK(cli("run --config " + cfg.string() + " --out " + out.string()) == 1);
    CHECK(fs::exists(out / "FAILED"));
  }

  TEST_CASE("run artifacts, rerun identity, flag precedence and report") {
    const auto cfg = write_config("tiny.json", tiny_config().to_json());
    const auto a = kScratch / "run-a", b = kScratch / "run-b";
    fs::remove_all(a);
    fs::remove_all(b);
    REQUIRE(cli("run --config " + cfg.string() + " --out " + a.string()) == 0);
    REQUIRE(cli("run --config " + cfg.string() + " --jobs 2 --out " + b.string()) == 0);
    for (const char* f : {"base.csv", "probe.csv", "probe_summary.csv", "hull.csv", "hull_samples.csv",
                          "hull_summary.csv", "distances.csv", "deciles.csv", "groups.csv", "logistic.csv", "ks.csv",
                          "ks_summary.csv", "summary.json", "manifest.json", "plots/relative_accuracy.svg",
                          "plots/hull_fraction.svg", "plots/deciles.svg", "plots/ks.svg"}) {
      CAPTURE(f);
      CHECK(fs::exists(a / f));
    }
    const auto ta = tree(a), tb = tree(b);
    for (const auto& [name, text] : ta)
      if (name.ends_with(".csv")) {
        CAPTURE(name);
        CHECK(tb.at(name) == text);
      }

    // --jobs overrides the config; the manifest records the effective config.
    const auto manifest = nlohmann::json::parse(ta.at("manifest.json"));
    const auto manifest_b = nlohmann::json::parse(tb.at("manifest.json"));
    CHECK(manifest["config"]["jobs"] == 1);
    CHECK(manifest_b["config"]["jobs"] == 2);
    CHECK(manifest["config_hash"] != manifest_b["config_hash"]);
    CHECK(manifest["seeds"].size() == 2);
    CHECK(manifest["versions"].contains("eigen"));

    const auto probe = report::read_csv(a / "probe.csv");
    CHECK(probe.size() == 4);
    CHECK(probe.columns() == std::vector<std::string>{"bottleneck", "trial", "mse_train", "mse_test", "base_acc",
                                                      "hybrid_acc", "rel_acc"});

    const auto rep = kScratch / "report";
    fs::remove_all(rep);
    REQUIRE(cli("report --in " + a.string() + " --out " + rep.string()) == 0);
    const auto md = slurp(rep / "report.md");
    CHECK(md.find("probe_summary.csv") != std::string::npos);
    CHECK(md.find("hull_summary.csv") != std::string::npos);
    CHECK(slurp(rep / "plots" / "relative_accuracy.svg") == ta.at("plots/relative_accuracy.svg"));
  }

  TEST_CASE("train, dump-acts, probe, hull and dist chain through files") {
    const auto data_dir = kScratch / "chain-data", net = kScratch / "chain-net", acts = kScratch / "chain-acts";
    for (const auto& p : {data_dir, net, acts, kScratch / "chain-probe", kScratch / "chain-hull", kScratch / "chain-dist"})
      fs::remove_all(p);
    REQUIRE(cli("gen-toy --n-id 2 --train-per-class 60 --test-per-class 20 --out " + data_dir.string()) == 0);
    REQUIRE(cli("train --data " + data_dir.string() + " --hidden 16 --epochs 3 --out " + net.string()) == 0);
    REQUIRE(cli("dump-acts --network " + (net / "network.bin").string() + " --data " + data_dir.string() + " --out " +
                acts.string()) == 0);
    const auto train_acts = data::load_activations(acts / "train.nact");
    CHECK(train_acts.size() == 600);
    CHECK(train_acts.dim() == 16);
    REQUIRE(cli("probe --train-acts " + (acts / "train.nact").string() + " --test-acts " +
                (acts / "test.nact").string() + " --head " + (acts / "head.bin").string() +
                " --bottlenecks 2,4 --export-latents --out " + (kScratch / "chain-probe").string()) == 0);
    const auto latent = kScratch / "chain-probe" / "latents";
    CHECK(fs::exists(latent / "b2_t0_test.nact"));
    REQUIRE(cli("hull --train " + (latent / "b2_t0_train.nact").string() + " --test " +
                (latent / "b2_t0_test.nact").string() + " --out " + (kScratch / "chain-hull").string()) == 0);
    const auto hull = report::read_csv(kScratch / "chain-hull" / "hull_samples.csv");
    CHECK(hull.size() == 200);
    REQUIRE(cli("dist --hull --train " + (latent / "b2_t0_train.nact").string() + " --test " +
                (latent / "b2_t0_test.nact").string() + " --out " + (kScratch / "chain-dist").string()) == 0);
    CHECK(report::read_csv(kScratch / "chain-dist" / "distances.csv").size() == 200);
    CHECK(fs::exists(kScratch / "chain-dist" / "deciles.csv"));
  }
}
