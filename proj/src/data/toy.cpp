#include "interprobe/data.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace interprobe::data {

Matrix random_orthogonal(int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("random_orthogonal: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = normal(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::VectorXd diag = qr.matrixQR().diagonal();
  for (int j = 0; j < n; ++j)
    if (diag(j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

void ToySpec::validate() const {
  if (n_input < 1) throw ValidationError("toy: n_input must be positive");
  if (n_id < 1 || n_id > n_input)
    throw ValidationError("toy: n_id must lie in [1, n_input] (got n_id=" + std::to_string(n_id) +
                          ", n_input=" + std::to_string(n_input) + ")");
  if (n_classes < 2) throw ValidationError("toy: n_classes must be at least 2");
  if (train_per_class < 1 || test_per_class < 0) throw ValidationError("toy: per-class counts must be positive");
  if (sigma && !(*sigma > 0.0)) throw ValidationError("toy: sigma must be positive");
  if (!(target_accuracy > 1.0 / n_classes && target_accuracy < 1.0))
    throw ValidationError("toy: target accuracy must lie in (1/n_classes, 1)");
}

ToySpec ToySpec::desk(int n_id, std::uint64_t seed) {
  ToySpec spec;
  spec.n_id = n_id;
  spec.train_per_class = 1000;
  spec.test_per_class = 200;
  spec.seed = seed;
  return spec;
}

ToyGeometry toy_geometry(const ToySpec& spec) {
  spec.validate();
  ToyGeometry geo;
  std::mt19937_64 rng(derive_seed(spec.seed, "centers"));
  std::normal_distribution<double> normal(0.0, 1.0);
  geo.intrinsic_centers.resize(spec.n_classes, spec.n_id);
  for (int k = 0; k < spec.n_classes; ++k)
    for (int d = 0; d < spec.n_id; ++d) geo.intrinsic_centers(k, d) = normal(rng);
  geo.rotation = random_orthogonal(spec.n_input, derive_seed(spec.seed, "rotation"));
  Matrix padded = Matrix::Zero(spec.n_classes, spec.n_input);
  padded.leftCols(spec.n_id) = geo.intrinsic_centers;
  geo.embedded_centers = padded * geo.rotation;
  return geo;
}

namespace {

void draw_split(const Matrix& centers, double sigma, int per_class, std::mt19937_64& rng, Matrix& features,
                std::vector<int>& labels) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const long k = centers.rows();
  features.resize(k * per_class, centers.cols());
  labels.resize(static_cast<std::size_t>(k * per_class));
  long row = 0;
  for (long c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      for (long d = 0; d < centers.cols(); ++d) features(row, d) = centers(c, d) + sigma * normal(rng);
      labels[static_cast<std::size_t>(row)] = static_cast<int>(c);
    }
  }
}

}  // namespace

ToyTask make_toy_task(const ToySpec& spec) {
  spec.validate();
  ToyTask task;
  task.geometry = toy_geometry(spec);
  task.sigma = spec.sigma ? *spec.sigma
                          : calibrate_sigma(task.geometry.embedded_centers, spec.target_accuracy,
                                            derive_seed(spec.seed, "calibrate"));
  std::mt19937_64 train_rng(derive_seed(spec.seed, "train-samples"));
  std::mt19937_64 test_rng(derive_seed(spec.seed, "test-samples"));
  draw_split(task.geometry.embedded_centers, task.sigma, spec.train_per_class, train_rng, task.data.train_features,
             task.data.train_labels);
  draw_split(task.geometry.embedded_centers, task.sigma, spec.test_per_class, test_rng, task.data.test_features,
             task.data.test_labels);
  task.data.n_classes = spec.n_classes;
  nlohmann::json prov = {{"kind", "toy"},
                         {"n_id", spec.n_id},
                         {"n_input", spec.n_input},
                         {"n_classes", spec.n_classes},
                         {"train_per_class", spec.train_per_class},
                         {"test_per_class", spec.test_per_class},
                         {"sigma", task.sigma},
                         {"sigma_calibrated", !spec.sigma.has_value()},
                         {"target_accuracy", spec.target_accuracy},
                         {"seed", spec.seed}};
  task.data.provenance = prov.dump();
  return task;
}

Dataset gen_gaussian_task(const ToySpec& spec) { return make_toy_task(spec).data; }

double nearest_centroid_accuracy(const Matrix& centers, double sigma, int draws, std::uint64_t seed) {
  const long k = centers.rows();
  const long dim = centers.cols();
  if (k < 1 || draws < 1) throw ValidationError("nearest_centroid_accuracy: need centers and draws");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector point(dim);
  long hits = 0;
  for (int i = 0; i < draws; ++i) {
    const long cls = i % k;
    for (long d = 0; d < dim; ++d) point(d) = centers(cls, d) + sigma * normal(rng);
    long best = 0;
    double best_dist = (centers.row(0).transpose() - point).squaredNorm();
    for (long j = 1; j < k; ++j) {
      const double dist = (centers.row(j).transpose() - point).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    hits += best == cls;
  }
  return static_cast<double>(hits) / draws;
}

CalibrationError::CalibrationError(double target, double low, double high)
    : Error([&] {
        std::ostringstream msg;
        msg << "cannot bracket target accuracy " << target << ": accuracy " << low << " at the smallest sigma, "
            << high << " at the largest";
        return msg.str();
      }()),
      accuracy_low(low),
      accuracy_high(high) {}

double calibrate_sigma(const Matrix& centers, double target_accuracy, std::uint64_t seed,
                       const CalibrationOptions& options) {
  const long k = centers.rows();
  if (k < 2) throw ValidationError("calibrate_sigma: need at least two centers");
  if (!(target_accuracy > 1.0 / static_cast<double>(k) && target_accuracy < 1.0))
    throw ValidationError("calibrate_sigma: target accuracy must lie in (1/k, 1)");

  // Common random numbers: the same standard-normal draws serve every probe,
  // so the estimated accuracy is a deterministic function of sigma.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int draws = options.draws;
  Matrix noise(draws, centers.cols());
  for (long r = 0; r < noise.rows(); ++r)
    for (long c = 0; c < noise.cols(); ++c) noise(r, c) = normal(rng);
  // |c_a + s z - c_j|^2 - s^2 |z|^2 = |c_a - c_j|^2 + 2 s z.(c_a - c_j)
  const Matrix projections = noise * centers.transpose();  // z . c_j
  Matrix center_dist(k, k);
  for (long a = 0; a < k; ++a)
    for (long j = 0; j < k; ++j) center_dist(a, j) = (centers.row(a) - centers.row(j)).squaredNorm();

  auto accuracy = [&](double sigma) {
    long hits = 0;
    for (int i = 0; i < draws; ++i) {
      const long cls = i % k;
      long best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (long j = 0; j < k; ++j) {
        const double score = center_dist(cls, j) + 2.0 * sigma * (projections(i, cls) - projections(i, j));
        if (score < best_score) {
          best_score = score;
          best = j;
        }
      }
      hits += best == cls;
    }
    return static_cast<double>(hits) / draws;
  };

  double lo = options.sigma_low;
  double hi = options.sigma_high;
  const double acc_lo = accuracy(lo);
  const double acc_hi = accuracy(hi);
  if (!(acc_lo > target_accuracy && acc_hi < target_accuracy)) throw CalibrationError(target_accuracy, acc_lo, acc_hi);
  double mid = std::sqrt(lo * hi);
  for (int it = 0; it < options.max_iterations; ++it) {
    mid = std::sqrt(lo * hi);
    const double acc = accuracy(mid);
    if (std::abs(acc - target_accuracy) <= options.accuracy_tolerance) return mid;
    if (acc > target_accuracy)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

}  // namespace interprobe::data
