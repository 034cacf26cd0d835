#include "doctest.h"

#include "interprobe/probe.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>

using namespace interprobe;
using namespace interprobe::probe;
using nn::Activation;

namespace {

// A frozen 3-class head whose tap layer (index 0, width 4) never activates its
// last unit, so a 3-wide bottleneck can carry the activations exactly.
nn::Network frozen_head(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::Parameters p;
  Matrix w0 = testutil::random_matrix(5, 4, rng);
  w0.col(3).setZero();
  RowVector b0 = testutil::random_matrix(1, 4, rng, 0.1);
  b0(3) = -1.0;
  p.push_back({w0, b0});
  p.push_back({testutil::random_matrix(4, 3, rng), RowVector::Zero(3)});
  nn::Network net(5, {{4, Activation::relu, 0.0}, {3, Activation::softmax, 0.0}}, p, 0);
  net.freeze();
  return net;
}

data::ActivationSet tap_set(const nn::Network& net, const Matrix& x, data::Split split, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> labels;
  const auto preds = nn::argmax_rows(nn::predict(net, x));
  for (long i = 0; i < x.rows(); ++i)
    labels.push_back(testutil::uniform_int(rng, 0, 3) == 0 ? testutil::uniform_int(rng, 0, 2)
                                                            : preds[static_cast<std::size_t>(i)]);
  return data::ActivationSet::make(nn::tap_activations(net, x), labels, preds, 3, split, "test");
}

Autoencoder hand_autoencoder(double scale) {
  // 4 -> 3 (relu) -> 3 (linear) -> 3 (relu) -> 4 (linear); exact on inputs
  // that are nonnegative with a zero last coordinate.
  Matrix enc = Matrix::Zero(4, 3);
  enc.topRows(3) = Matrix::Identity(3, 3);
  Matrix dec = Matrix::Zero(3, 4);
  dec.leftCols(3) = Matrix::Identity(3, 3);
  nn::Parameters p = {{scale * enc, RowVector::Zero(3)},
                      {scale * Matrix::Identity(3, 3), RowVector::Zero(3)},
                      {scale * Matrix::Identity(3, 3), RowVector::Zero(3)},
                      {scale * dec, RowVector::Zero(4)}};
  return Autoencoder(nn::Network(4,
                                 {{3, Activation::relu, 0.0},
                                  {3, Activation::linear, 0.0},
                                  {3, Activation::relu, 0.0},
                                  {4, Activation::linear, 0.0}},
                                 p, 1));
}

data::ActivationSet unlabelled(Matrix acts) {
  const auto n = static_cast<std::size_t>(acts.rows());
  return data::ActivationSet::make(std::move(acts), std::vector<int>(n, 0), std::vector<int>(n, 0), 1,
                                   data::Split::train, "synthetic");
}

// Mean per-element residual of the best rank-k linear reconstruction.
double pca_residual(const Matrix& x, int k) {
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
  const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(cov).eigenvalues();  // ascending
  return eig.head(eig.size() - k).sum() / static_cast<double>(x.cols());
}

}  // namespace

TEST_SUITE("probe.hybrid") {
  TEST_CASE("identity autoencoder reproduces the base accuracy exactly") {
    const auto net = frozen_head(1);
    std::mt19937_64 rng(2);
    const auto test = tap_set(net, testutil::random_matrix(300, 5, rng), data::Split::test, 3);
    const auto ae = hand_autoencoder(1.0);
    CHECK(ae.reconstruct(test.activations) == test.activations);
    const auto hybrid = hybrid_accuracy(net, ae, test);
    CHECK(hybrid.accuracy == test.base_accuracy);
    CHECK(hybrid.predicted == test.base_predictions);
  }

  TEST_CASE("all-zero autoencoder predicts one class") {
    const auto net = frozen_head(4);
    std::mt19937_64 rng(5);
    const auto test = tap_set(net, testutil::random_matrix(300, 5, rng), data::Split::test, 6);
    const auto zero = hand_autoencoder(0.0);
    const auto hybrid = hybrid_accuracy(net, zero, test);
    const int constant = hybrid.predicted.front();
    CHECK(std::all_of(hybrid.predicted.begin(), hybrid.predicted.end(), [&](int p) { return p == constant; }));
    const double freq = static_cast<double>(std::count(test.labels.begin(), test.labels.end(), constant)) / 300.0;
    CHECK(hybrid.accuracy == doctest::Approx(freq).epsilon(1e-15));
  }

  TEST_CASE("unfrozen base network is refused") {
    auto net = frozen_head(7);
    nn::Network open(net.input_width(), net.layers(), net.parameters(), net.tap_index());
    std::mt19937_64 rng(8);
    const auto test = tap_set(net, testutil::random_matrix(10, 5, rng), data::Split::test, 9);
    CHECK_THROWS_AS(hybrid_accuracy(open, hand_autoencoder(1.0), test), FrozenError);
  }

  TEST_CASE("shape checks") {
    CHECK_THROWS_AS(make_autoencoder({.input_dim = 4, .bottleneck = 4}), ValidationError);
    CHECK_THROWS_AS(make_autoencoder({.input_dim = 4, .bottleneck = 0}), ValidationError);
    AutoencoderSpec spec{.input_dim = 6, .hidden_width = 8, .bottleneck = 2};
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(train_autoencoder(spec, unlabelled(testutil::random_matrix(10, 5, rng))), DimensionError);
    CHECK_THROWS_AS(Autoencoder(nn::Network::create(4, {{3, Activation::relu, 0.0}, {4, Activation::linear, 0.0}}, 0, 0)),
                    ValidationError);
  }
}

TEST_SUITE("probe.autoencoder") {
  TEST_CASE("encode and decode compose to the forward pass") {
    std::mt19937_64 rng(10);
    const auto ae = make_autoencoder({.input_dim = 12, .hidden_width = 16, .bottleneck = 3});
    Matrix x = testutil::random_matrix(20, 12, rng);
    x.row(5) = x.row(2);
    const Matrix z = ae.encode(x);
    CHECK(z.cols() == 3);
    CHECK(z.row(5) == z.row(2));
    CHECK((ae.decode(z) - ae.reconstruct(x)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("training ignores labels and is seed-deterministic") {
    std::mt19937_64 rng(11);
    const Matrix x = testutil::random_matrix(100, 6, rng);
    AutoencoderSpec spec{.input_dim = 6, .hidden_width = 8, .bottleneck = 2};
    spec.train.epochs = 3;
    spec.train.seed = 5;
    std::vector<int> a(100), b(100);
    for (int i = 0; i < 100; ++i) {
      a[static_cast<std::size_t>(i)] = i % 3;
      b[static_cast<std::size_t>(i)] = (i * 7 + 1) % 3;
    }
    const auto set_a = data::ActivationSet::make(x, a, a, 3, data::Split::train, "a");
    const auto set_b = data::ActivationSet::make(x, b, a, 3, data::Split::train, "b");
    const auto first = train_autoencoder(spec, set_a).network().checksum();
    CHECK(first == train_autoencoder(spec, set_b).network().checksum());
    CHECK(first == train_autoencoder(spec, set_a).network().checksum());
    spec.train.seed = 6;
    CHECK(train_autoencoder(spec, set_a).network().checksum() != first);
  }

  TEST_CASE("constant activations are reconstructed") {
    Matrix x(4096, 10);
    for (long c = 0; c < 10; ++c) x.col(c).setConstant(0.1 * static_cast<double>(c));
    AutoencoderSpec spec{.input_dim = 10, .hidden_width = 32, .bottleneck = 2};
    spec.train.seed = 3;
    const auto ae = train_autoencoder(spec, unlabelled(x));
    const double mse = reconstruction_mse(ae, x);
    MESSAGE("constant-input mse " << mse);
    CHECK(mse < 1e-5);
  }

  TEST_CASE("linear subspace data against the PCA limit") {
    // Four latent factors with distinct scales, embedded in 128 dimensions.
    std::mt19937_64 rng(12);
    const Matrix basis = data::random_orthogonal(128, 99).topRows(4);
    Vector scales(4);
    scales << 2.0, 1.5, 1.0, 0.6;
    auto sample = [&](long n) { return Matrix(testutil::random_matrix(n, 4, rng) * scales.asDiagonal() * basis); };
    const Matrix train = sample(4000);
    const Matrix test = sample(1000);
    const double variance = (test.rowwise() - test.colwise().mean()).squaredNorm() / static_cast<double>(test.size());

    AutoencoderSpec four{.input_dim = 128, .bottleneck = 4};
    four.train.seed = 1;
    const double mse4 = reconstruction_mse(train_autoencoder(four, unlabelled(train)), test);
    AutoencoderSpec two{.input_dim = 128, .bottleneck = 2};
    two.train.seed = 1;
    const double mse2 = reconstruction_mse(train_autoencoder(two, unlabelled(train)), test);
    MESSAGE("variance " << variance << ", mse k=4 " << mse4 << " (pca " << pca_residual(test, 4) << "), mse k=2 " << mse2
                        << " (pca " << pca_residual(test, 2) << ")");
    CHECK(mse4 <= pca_residual(test, 4) + 1e-2 * variance);
    CHECK(mse2 >= 0.9 * pca_residual(test, 2));
  }
}

TEST_SUITE("probe.sweep") {
  TEST_CASE("ordering, counts and frozen-base invariance") {
    const auto net = frozen_head(20);
    std::mt19937_64 rng(21);
    const auto train = tap_set(net, testutil::random_matrix(200, 5, rng), data::Split::train, 22);
    const auto test = tap_set(net, testutil::random_matrix(100, 5, rng), data::Split::test, 23);
    const auto before = net.checksum();
    SweepConfig cfg;
    cfg.bottlenecks = {3, 1, 2};
    cfg.trials = 2;
    cfg.hidden_width = 16;
    cfg.schedule.epochs = 2;
    cfg.jobs = 2;
    const auto results = probe_sweep(net, train, test, cfg);
    CHECK(net.checksum() == before);
    REQUIRE(results.size() == 6);
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(results[i].bottleneck == static_cast<int>(i / 2) + 1);
      CHECK(results[i].trial == static_cast<int>(i % 2));
      CHECK(results[i].latent_test.cols() == results[i].bottleneck);
      CHECK(results[i].latent_train.rows() == 200);
      CHECK(results[i].relative_accuracy == results[i].hybrid_accuracy / results[i].base_accuracy);
      CHECK(results[i].relative_accuracy >= 0.0);
    }
    // Concurrency does not change results.
    cfg.jobs = 1;
    const auto serial = probe_sweep(net, train, test, cfg);
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(serial[i].mse_test == results[i].mse_test);
      CHECK(serial[i].latent_test == results[i].latent_test);
    }
    cfg.bottlenecks = {2};
    cfg.trials = 3;
    CHECK(probe_sweep(net, train, test, cfg).size() == 3);
    cfg.bottlenecks.clear();
    CHECK_THROWS_AS(probe_sweep(net, train, test, cfg), ValidationError);
  }
}
