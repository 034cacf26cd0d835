#include "interprobe/stats.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

namespace interprobe::stats {

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::euclidean_nn:
      return "euclidean_nn";
    case Metric::cosine_nn:
      return "cosine_nn";
    case Metric::class_conditional_nn:
      return "class_conditional_nn";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  if (name == "euclidean_nn" || name == "euclidean") return Metric::euclidean_nn;
  if (name == "cosine_nn" || name == "cosine") return Metric::cosine_nn;
  if (name == "class_conditional_nn" || name == "class_conditional") return Metric::class_conditional_nn;
  throw ValidationError("unknown metric '" + std::string(name) + "'");
}

// --- nearest neighbours ----------------------------------------------------

std::vector<double> nn_distance(const Matrix& queries, const Matrix& references, Metric metric,
                                std::span<const int> reference_labels, std::span<const int> query_labels, int jobs) {
  if (references.rows() == 0) throw ValidationError("nn_distance: empty reference set");
  if (queries.cols() != references.cols())
    throw DimensionError("nn_distance: query vs reference dimension", references.cols(), queries.cols());

  // Reference rows to scan per query label (all rows for unconditional metrics).
  std::map<int, std::vector<long>> by_label;
  if (metric == Metric::class_conditional_nn) {
    if (reference_labels.empty() || query_labels.empty())
      throw ValidationError("nn_distance: class-conditional metric needs reference and query labels");
    if (static_cast<long>(reference_labels.size()) != references.rows())
      throw DimensionError("nn_distance: reference labels", references.rows(), static_cast<long>(reference_labels.size()));
    if (static_cast<long>(query_labels.size()) != queries.rows())
      throw DimensionError("nn_distance: query labels", queries.rows(), static_cast<long>(query_labels.size()));
    for (long r = 0; r < references.rows(); ++r) by_label[reference_labels[static_cast<std::size_t>(r)]].push_back(r);
    for (std::size_t q = 0; q < query_labels.size(); ++q)
      if (!by_label.contains(query_labels[q]))
        throw ValidationError("nn_distance: query " + std::to_string(q) + " has label " +
                              std::to_string(query_labels[q]) + " absent from the references");
  }

  Vector ref_norms;
  if (metric == Metric::cosine_nn) ref_norms = references.rowwise().norm();

  std::vector<double> out(static_cast<std::size_t>(queries.rows()));
  parallel_for(out.size(), jobs, [&](std::size_t qi) {
    const auto q = queries.row(static_cast<long>(qi));
    double best = std::numeric_limits<double>::infinity();
    switch (metric) {
      case Metric::euclidean_nn:
        for (long r = 0; r < references.rows(); ++r) best = std::min(best, (references.row(r) - q).squaredNorm());
        best = std::sqrt(best);
        break;
      case Metric::class_conditional_nn:
        for (long r : by_label.at(query_labels[qi])) best = std::min(best, (references.row(r) - q).squaredNorm());
        best = std::sqrt(best);
        break;
      case Metric::cosine_nn: {
        const double qn = q.norm();
        for (long r = 0; r < references.rows(); ++r) {
          double d = 1.0;
          if (qn > 0.0 && ref_norms(r) > 0.0) d = std::clamp(1.0 - references.row(r).dot(q) / (qn * ref_norms(r)), 0.0, 2.0);
          best = std::min(best, d);
        }
        break;
      }
    }
    out[qi] = best;
  });
  return out;
}

// --- decile curves -------------------------------------------------------------

std::vector<Bin> binned_accuracy(std::span<const double> distances, std::span<const std::uint8_t> correct,
                                 int n_bins) {
  const auto m = static_cast<long>(distances.size());
  if (static_cast<long>(correct.size()) != m)
    throw DimensionError("binned_accuracy: flag count", m, static_cast<long>(correct.size()));
  if (n_bins < 1 || m < n_bins) throw ValidationError("binned_accuracy: need at least n_bins samples");
  std::vector<long> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0L);
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
    return distances[static_cast<std::size_t>(a)] < distances[static_cast<std::size_t>(b)];
  });
  std::vector<Bin> bins(static_cast<std::size_t>(n_bins));
  const long base = m / n_bins;
  const long extra = m % n_bins;
  long cursor = 0;
  for (long b = 0; b < n_bins; ++b) {
    Bin& bin = bins[static_cast<std::size_t>(b)];
    bin.count = base + (b < extra ? 1 : 0);
    double dist_sum = 0.0;
    long hits = 0;
    for (long k = 0; k < bin.count; ++k, ++cursor) {
      const long idx = order[static_cast<std::size_t>(cursor)];
      bin.members.push_back(idx);
      dist_sum += distances[static_cast<std::size_t>(idx)];
      hits += correct[static_cast<std::size_t>(idx)] != 0;
    }
    bin.mean_distance = dist_sum / static_cast<double>(bin.count);
    bin.accuracy = static_cast<double>(hits) / static_cast<double>(bin.count);
  }
  return bins;
}

// --- logistic regression ---------------------------------------------------------

Eigen::MatrixXd logistic_design(std::span<const double> distance, std::span<const std::uint8_t> in_hull, double* mean,
                                double* sd) {
  const auto m = static_cast<long>(distance.size());
  if (static_cast<long>(in_hull.size()) != m)
    throw DimensionError("logistic design: in_hull count", m, static_cast<long>(in_hull.size()));
  const double mu = std::accumulate(distance.begin(), distance.end(), 0.0) / static_cast<double>(std::max<long>(m, 1));
  double ss = 0.0;
  for (double d : distance) ss += (d - mu) * (d - mu);
  // Exactly constant input has zero spread even when rounding leaves ss > 0.
  const bool constant = std::adjacent_find(distance.begin(), distance.end(), std::not_equal_to<>()) == distance.end();
  const double sigma = m > 1 && !constant ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
  Eigen::MatrixXd x(m, 4);
  for (long i = 0; i < m; ++i) {
    const double z = sigma > 0.0 ? (distance[static_cast<std::size_t>(i)] - mu) / sigma : 0.0;
    const double h = in_hull[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    x(i, 0) = 1.0;
    x(i, 1) = z;
    x(i, 2) = h;
    x(i, 3) = z * h;
  }
  if (mean) *mean = mu;
  if (sd) *sd = sigma;
  return x;
}

namespace {

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (long i = 0; i < eta.size(); ++i) {
    // y*eta - log(1 + e^eta), evaluated without overflow.
    const double e = eta(i);
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y(i) * e - softplus;
  }
  return ll;
}

double sigmoid(double e) {
  if (e >= 0) return 1.0 / (1.0 + std::exp(-e));
  const double z = std::exp(e);
  return z / (1.0 + z);
}

}  // namespace

LogisticFit logistic_fit(std::span<const double> distance, std::span<const std::uint8_t> in_hull,
                         std::span<const std::uint8_t> correct, const IrlsOptions& options) {
  const auto m = static_cast<long>(distance.size());
  if (static_cast<long>(correct.size()) != m)
    throw DimensionError("logistic_fit: outcome count", m, static_cast<long>(correct.size()));
  if (m < 8) throw ValidationError("logistic_fit: need at least 8 samples");
  const long positives = std::count_if(correct.begin(), correct.end(), [](std::uint8_t c) { return c != 0; });
  if (positives == 0 || positives == m) throw ValidationError("logistic_fit: outcome is constant (non-identifiable)");

  LogisticFit fit;
  const Eigen::MatrixXd full = logistic_design(distance, in_hull, &fit.distance_mean, &fit.distance_sd);
  std::vector<long> kept;
  for (long c = 0; c < 4; ++c) {
    fit.identified[static_cast<std::size_t>(c)] = full.col(c).cwiseAbs().maxCoeff() > 0.0;
    if (fit.identified[static_cast<std::size_t>(c)]) kept.push_back(c);
  }
  const auto p = static_cast<long>(kept.size());
  Eigen::MatrixXd x(m, p);
  for (long k = 0; k < p; ++k) x.col(k) = full.col(kept[static_cast<std::size_t>(k)]);
  Eigen::VectorXd y(m);
  for (long i = 0; i < m; ++i) y(i) = correct[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = log_likelihood(x, y, beta);
  fit.log_likelihood.push_back(ll);
  const Eigen::MatrixXd ridge = options.ridge * Eigen::MatrixXd::Identity(p, p);

  auto information = [&](const Eigen::VectorXd& b, Eigen::VectorXd* score) {
    const Eigen::VectorXd eta = x * b;
    Eigen::VectorXd w(m);
    Eigen::VectorXd resid(m);
    for (long i = 0; i < m; ++i) {
      const double mu = sigmoid(eta(i));
      w(i) = mu * (1.0 - mu);
      resid(i) = y(i) - mu;
    }
    if (score) *score = x.transpose() * resid;
    return Eigen::MatrixXd(x.transpose() * w.asDiagonal() * x + ridge);
  };

  for (int it = 0; it < options.max_iterations; ++it) {
    Eigen::VectorXd score;
    const Eigen::MatrixXd info = information(beta, &score);
    const Eigen::VectorXd delta = info.ldlt().solve(score);
    double step = 1.0;
    Eigen::VectorXd candidate = beta + delta;
    double candidate_ll = log_likelihood(x, y, candidate);
    while (candidate_ll < ll && step > 1e-10) {
      step *= 0.5;
      candidate = beta + step * delta;
      candidate_ll = log_likelihood(x, y, candidate);
    }
    fit.iterations = it + 1;
    const double change = (step * delta).cwiseAbs().maxCoeff();
    if (candidate_ll >= ll) {
      beta = candidate;
      assert(candidate_ll >= fit.log_likelihood.back());
      ll = candidate_ll;
      fit.log_likelihood.push_back(ll);
    }
    if (change < options.tolerance || step <= 1e-10) {
      fit.converged = change < options.tolerance;
      break;
    }
  }

  const Eigen::MatrixXd cov = information(beta, nullptr).inverse();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  fit.coefficients.fill(0.0);
  fit.standard_errors.fill(nan);
  fit.z_values.fill(nan);
  for (long k = 0; k < p; ++k) {
    const auto c = static_cast<std::size_t>(kept[static_cast<std::size_t>(k)]);
    fit.coefficients[c] = beta(k);
    fit.standard_errors[c] = std::sqrt(std::max(cov(k, k), 0.0));
    if (fit.standard_errors[c] > 0.0) fit.z_values[c] = beta(k) / fit.standard_errors[c];
  }
  return fit;
}

// --- Kolmogorov-Smirnov ------------------------------------------------------------

KsResult ks_statistic(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty()) throw ValidationError("ks_statistic: empty sample");
  std::vector<double> a(sample_a.begin(), sample_a.end());
  std::vector<double> b(sample_b.begin(), sample_b.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Past the end of one sample the gap only shrinks toward 0.
  return {d, static_cast<long>(a.size()), static_cast<long>(b.size())};
}

// --- bootstrap ---------------------------------------------------------------------

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of empty data");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(std::span<const double> values, int resamples, double level, std::uint64_t seed) {
  if (values.empty()) throw ValidationError("bootstrap_ci: empty input");
  if (resamples < 1) throw ValidationError("bootstrap_ci: need at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap_ci: level must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  const auto n = values.size();
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& mean : means) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      sum += values[static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64)];
    mean = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = 1.0 - level;
  return {quantile_sorted(means, alpha / 2.0), quantile_sorted(means, 1.0 - alpha / 2.0)};
}

// --- grouped summaries --------------------------------------------------------------

std::vector<GroupStat> correctness_by_hull_table(std::span<const DistanceReport> reports, Metric metric) {
  if (reports.empty()) throw ValidationError("correctness_by_hull_table: no reports");
  std::array<double, 4> sums{};
  std::array<long, 4> counts{};
  for (const auto& report : reports) {
    if (!report.in_hull) throw ValidationError("correctness_by_hull_table: report lacks hull flags");
    const auto it = report.distances.find(metric);
    if (it == report.distances.end())
      throw ValidationError("correctness_by_hull_table: report lacks metric " + to_string(metric));
    const auto& dist = it->second;
    if (dist.size() != report.correct.size() || report.in_hull->size() != report.correct.size())
      throw DimensionError("correctness_by_hull_table: report lengths", static_cast<long>(report.correct.size()),
                           static_cast<long>(dist.size()));
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const std::size_t cell = (report.correct[i] ? 2 : 0) + ((*report.in_hull)[i] ? 1 : 0);
      sums[cell] += dist[i];
      ++counts[cell];
    }
  }
  std::vector<GroupStat> out;
  for (std::size_t cell = 0; cell < 4; ++cell) {
    if (counts[cell] == 0) continue;
    out.push_back({cell >= 2, (cell & 1) != 0, sums[cell] / static_cast<double>(counts[cell]), counts[cell]});
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> split_by_correctness(std::span<const double> distances,
                                                                         std::span<const std::uint8_t> correct) {
  if (distances.size() != correct.size())
    throw DimensionError("split_by_correctness: flag count", static_cast<long>(distances.size()),
                         static_cast<long>(correct.size()));
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t i = 0; i < distances.size(); ++i) (correct[i] ? out.first : out.second).push_back(distances[i]);
  return out;
}

}  // namespace interprobe::stats
