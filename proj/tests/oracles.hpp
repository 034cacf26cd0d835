#pragma once

// Independent reference implementations and the randomized sweeps that pit
// the library against them. Shared by the unit tests and the acceptance gate.

#include "interprobe/hull.hpp"
#include "interprobe/nn.hpp"
#include "interprobe/stats.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracles {

using interprobe::Flags;
using interprobe::Matrix;
using interprobe::Vector;

// --- backprop vs central finite differences ------------------------------------

// Central differences of the batch loss with dropout masks held fixed by
// reusing the same seed. Parameters whose perturbation flips a relu
// pre-activation are skipped: the loss is not differentiable there.
struct FdReport {
  double max_rel_error = 0.0;
  long checked = 0;
  long skipped = 0;
};

inline bool same_relu_pattern(const interprobe::nn::ForwardPass& a, const interprobe::nn::ForwardPass& b) {
  for (std::size_t i = 0; i < a.pre.size(); ++i)
    if (((a.pre[i].array() > 0) != (b.pre[i].array() > 0)).any()) return false;
  return true;
}

inline FdReport finite_difference_check(interprobe::nn::Network net, const Matrix& x,
                                        const interprobe::nn::Targets& t, interprobe::nn::Loss loss,
                                        std::uint64_t seed) {
  using namespace interprobe::nn;
  const auto base = forward(net, x, true, seed);
  const auto grads = backward(net, base, t, loss);
  const double h = 1e-4;
  FdReport rep;
  auto probe = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + h;
    const auto plus = forward(net, x, true, seed);
    slot = keep - h;
    const auto minus = forward(net, x, true, seed);
    slot = keep;
    if (!same_relu_pattern(plus, base) || !same_relu_pattern(minus, base)) {
      ++rep.skipped;
      return;
    }
    const double fd = (loss_value(net, plus.output(), t, loss) - loss_value(net, minus.output(), t, loss)) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(fd - analytic) / denom);
    ++rep.checked;
  };
  auto& params = net.mutable_parameters();
  for (std::size_t l = 0; l < params.size(); ++l) {
    for (long i = 0; i < params[l].weight.size(); ++i) probe(params[l].weight.data()[i], grads[l].weight.data()[i]);
    for (long i = 0; i < params[l].bias.size(); ++i) probe(params[l].bias.data()[i], grads[l].bias.data()[i]);
  }
  return rep;
}

/// Random depth-1..3 networks mixing relu/linear hidden layers, dropout,
/// softmax/linear outputs and both losses.
inline FdReport backprop_sweep(int networks = 50, std::uint64_t seed = 2024) {
  using namespace interprobe::nn;
  std::mt19937_64 rng(seed);
  const Activation hidden_kinds[] = {Activation::relu, Activation::linear};
  FdReport total;
  for (int trial = 0; trial < networks; ++trial) {
    const int depth = testutil::uniform_int(rng, 1, 3);
    const int input = testutil::uniform_int(rng, 1, 8);
    std::vector<LayerSpec> layers;
    for (int l = 0; l + 1 < depth; ++l)
      layers.push_back({testutil::uniform_int(rng, 1, 8), hidden_kinds[testutil::uniform_int(rng, 0, 1)],
                        testutil::uniform_int(rng, 0, 1) ? 0.3 : 0.0});
    const bool classify = trial % 2 == 0;
    const int out = testutil::uniform_int(rng, 2, 8);
    const Activation out_kind = classify ? (trial % 4 == 0 ? Activation::softmax : Activation::linear)
                                         : (trial % 3 == 0 ? Activation::softmax : Activation::linear);
    layers.push_back({out, out_kind, 0.0});
    auto net = Network::create(input, layers, -1, static_cast<std::uint64_t>(trial));
    // Non-zero biases so relu kinks are not all at the origin.
    for (auto& p : net.mutable_parameters()) p.bias = testutil::random_matrix(1, p.bias.size(), rng, 0.5);
    const Matrix x = testutil::random_matrix(5, input, rng);
    Targets t;
    if (classify) {
      std::vector<int> y;
      for (int r = 0; r < 5; ++r) y.push_back(testutil::uniform_int(rng, 0, out - 1));
      t = y;
    } else {
      t = Matrix(testutil::random_matrix(5, out, rng));
    }
    const auto rep = finite_difference_check(net, x, t, classify ? Loss::cross_entropy : Loss::mean_squared_error,
                                             static_cast<std::uint64_t>(trial) + 100);
    total.max_rel_error = std::max(total.max_rel_error, rep.max_rel_error);
    total.checked += rep.checked;
    total.skipped += rep.skipped;
  }
  return total;
}

// --- phase-1 simplex vs basic-solution enumeration -------------------------------

// Exhaustive basic-solution search: {x >= 0 : A x = b} is non-empty iff some
// set of linearly independent columns (possibly empty) solves it with
// nonnegative coefficients.
inline bool enumerate_feasible(const Eigen::MatrixXd& A, const Vector& b) {
  const long m = A.rows();
  const long n = A.cols();
  if (b.cwiseAbs().maxCoeff() < 1e-12) return true;
  for (long mask = 1; mask < (1L << n); ++mask) {
    std::vector<long> cols;
    for (long j = 0; j < n; ++j)
      if (mask & (1L << j)) cols.push_back(j);
    if (static_cast<long>(cols.size()) > m) continue;
    Eigen::MatrixXd sub(m, static_cast<long>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<long>(k)) = A.col(cols[k]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    if (qr.rank() < sub.cols()) continue;
    const Vector x = qr.solve(b);
    if ((sub * x - b).cwiseAbs().maxCoeff() > 1e-9 * (1 + b.cwiseAbs().maxCoeff())) continue;
    if (x.minCoeff() >= -1e-9) return true;
  }
  return false;
}

struct Agreement {
  int cases = 0;
  int agree = 0;
  /// Feasible (simplex) or inside (hull) verdicts of the oracle.
  int positive = 0;
  /// Solutions or certificates that failed their own residual check.
  int bad_certificates = 0;
};

inline Agreement simplex_sweep(int cases = 200, std::uint64_t seed = 31) {
  std::mt19937_64 rng(seed);
  Agreement out;
  for (int c = 0; c < cases; ++c) {
    const int m = testutil::uniform_int(rng, 1, 3);
    const int n = testutil::uniform_int(rng, 1, 6);
    Eigen::MatrixXd A(m, n);
    Vector b(m);
    if (c % 3 == 0) {
      // Small integers: plenty of degenerate bases and ties.
      for (long i = 0; i < A.size(); ++i) A.data()[i] = testutil::uniform_int(rng, -2, 2);
      for (long i = 0; i < m; ++i) b(i) = testutil::uniform_int(rng, -3, 3);
    } else {
      A = testutil::random_matrix(m, n, rng);
      if (c % 3 == 1) {
        Vector x0(n);
        for (long j = 0; j < n; ++j)
          x0(j) = testutil::uniform_int(rng, 0, 1) ? std::abs(testutil::random_matrix(1, 1, rng)(0, 0)) : 0.0;
        b = A * x0;
      } else {
        b = testutil::random_matrix(m, 1, rng);
      }
    }
    const bool oracle = enumerate_feasible(A, b);
    const auto r = interprobe::hull::phase1_simplex(A, b);
    ++out.cases;
    if (r.feasible == oracle) ++out.agree;
    if (oracle) ++out.positive;
    if (r.feasible &&
        (r.x.minCoeff() < 0.0 || (A * r.x - b).cwiseAbs().maxCoeff() > 1e-6 * (1 + b.cwiseAbs().maxCoeff())))
      ++out.bad_certificates;
  }
  return out;
}

// --- hull membership vs a 2D orientation oracle ----------------------------------

inline double cross(const Vector& o, const Vector& a, const Vector& b) {
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

// Andrew's monotone chain, counter-clockwise, collinear points dropped.
inline std::vector<Vector> convex_hull_2d(std::vector<Vector> pts) {
  std::sort(pts.begin(), pts.end(),
            [](const Vector& a, const Vector& b) { return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1)); });
  if (pts.size() < 3) return pts;
  std::vector<Vector> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Signed distance to the polygon boundary: positive inside.
inline double signed_margin(const std::vector<Vector>& poly, const Vector& q) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vector& a = poly[i];
    const Vector& b = poly[(i + 1) % poly.size()];
    margin = std::min(margin, cross(a, b, q) / (b - a).norm());
  }
  return margin;
}

/// True when an inside certificate reproduces q within tolerance (or when
/// the verdict is outside, which carries no weights).
inline bool certificate_holds(const interprobe::hull::HullCertificate& cert, const Matrix& gens, const Vector& q,
                              double tol) {
  if (!cert.inside) return true;
  const Vector lambda = cert.lambda(gens.rows());
  const Vector rebuilt = gens.transpose() * lambda;
  return lambda.minCoeff() >= 0.0 && std::abs(lambda.sum() - 1.0) <= tol &&
         (rebuilt - q).cwiseAbs().maxCoeff() <= tol * (1 + q.cwiseAbs().maxCoeff());
}

/// Queries pushed off random hull edges by 1e-4..1e-1; queries within 1e-5 of
/// the boundary (the tolerance band) are redrawn.
inline Agreement hull2d_sweep(int cases = 200, std::uint64_t seed = 77) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Agreement out;
  while (out.cases < cases) {
    const int n = testutil::uniform_int(rng, 3, 30);
    const Matrix gens = testutil::random_matrix(n, 2, rng);
    std::vector<Vector> pts;
    for (int i = 0; i < n; ++i) pts.push_back(gens.row(i).transpose());
    const auto poly = convex_hull_2d(pts);
    if (poly.size() < 3) continue;
    const std::size_t e = static_cast<std::size_t>(testutil::uniform_int(rng, 0, static_cast<int>(poly.size()) - 1));
    const Vector a = poly[e];
    const Vector b = poly[(e + 1) % poly.size()];
    const Vector on_edge = a + unit(rng) * (b - a);
    Vector normal(2);
    normal << (b - a)(1), -(b - a)(0);  // outward for a counter-clockwise polygon
    normal.normalize();
    const double offset = (unit(rng) < 0.5 ? -1.0 : 1.0) * std::pow(10.0, -1.0 - 3.0 * unit(rng));
    const Vector q = on_edge + offset * normal;
    const double margin = signed_margin(poly, q);
    if (std::abs(margin) < 1e-5) continue;
    ++out.cases;
    const bool oracle = margin > 0;
    const auto cert = interprobe::hull::in_hull({q, gens, 1e-6});
    if (!certificate_holds(cert, gens, q, 1e-6)) ++out.bad_certificates;
    if (cert.inside == oracle) ++out.agree;
    if (oracle) ++out.positive;
  }
  return out;
}

// --- IRLS vs gradient ascent -----------------------------------------------------

// Full-batch gradient ascent on a design built here: Barzilai-Borwein steps,
// halved until the log-likelihood does not drop, until the gradient vanishes.
inline std::array<double, 4> gradient_ascent_logistic(const std::vector<double>& d, const Flags& h, const Flags& y) {
  const long m = static_cast<long>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(m);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  std::vector<std::array<double, 4>> rows;
  for (long i = 0; i < m; ++i) {
    const double z = (d[static_cast<std::size_t>(i)] - mean) / sd;
    const double hi = h[static_cast<std::size_t>(i)];
    rows.push_back({1.0, z, hi, z * hi});
  }
  auto ll_and_grad = [&](const std::array<double, 4>& b, std::array<double, 4>* g) {
    double ll = 0.0;
    if (g) g->fill(0.0);
    for (long i = 0; i < m; ++i) {
      const auto& x = rows[static_cast<std::size_t>(i)];
      const double eta = b[0] * x[0] + b[1] * x[1] + b[2] * x[2] + b[3] * x[3];
      const double yi = y[static_cast<std::size_t>(i)];
      ll += yi * eta - std::log1p(std::exp(eta));
      const double p = 1.0 / (1.0 + std::exp(-eta));
      if (g)
        for (std::size_t k = 0; k < 4; ++k) (*g)[k] += (yi - p) * x[k];
    }
    return ll;
  };
  std::array<double, 4> beta{};
  std::array<double, 4> g;
  double ll = ll_and_grad(beta, &g);
  double step = 1.0 / static_cast<double>(m);
  for (int it = 0; it < 100000; ++it) {
    double gnorm = 0.0;
    for (double v : g) gnorm = std::max(gnorm, std::abs(v));
    if (gnorm < 1e-10) break;
    std::array<double, 4> next, next_g;
    double next_ll;
    for (;;) {
      for (std::size_t k = 0; k < 4; ++k) next[k] = beta[k] + step * g[k];
      next_ll = ll_and_grad(next, &next_g);
      if (next_ll >= ll) break;
      step *= 0.5;
    }
    double s2 = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double sk = next[k] - beta[k];
      s2 += sk * sk;
      sy += sk * (g[k] - next_g[k]);
    }
    step = sy > 0.0 ? s2 / sy : step;
    beta = next;
    g = next_g;
    ll = next_ll;
  }
  return beta;
}

struct IrlsReport {
  int datasets = 0;
  double max_coefficient_diff = 0.0;
  /// max |z - coefficient / se| over all terms.
  double max_z_mismatch = 0.0;
  bool all_converged = true;
  bool log_likelihood_monotone = true;
};

/// Datasets of 200 samples from a known logistic model with lognormal
/// distances and a random hull flag.
inline IrlsReport irls_sweep(int datasets = 10, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IrlsReport out;
  for (int trial = 0; trial < datasets; ++trial) {
    std::vector<double> d;
    Flags h, y;
    for (int i = 0; i < 200; ++i) {
      d.push_back(std::exp(testutil::random_matrix(1, 1, rng)(0, 0)));
      h.push_back(u(rng) < 0.5);
    }
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / 200.0;
    for (int i = 0; i < 200; ++i) {
      const double z = d[static_cast<std::size_t>(i)] - mean;
      const double hi = h[static_cast<std::size_t>(i)];
      const double eta = 0.4 - 0.9 * z + 0.6 * hi + 0.3 * z * hi;
      y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-eta)));
    }
    const auto fit = interprobe::stats::logistic_fit(d, h, y);
    const auto oracle = gradient_ascent_logistic(d, h, y);
    ++out.datasets;
    out.all_converged = out.all_converged && fit.converged;
    for (std::size_t k = 0; k < 4; ++k) {
      out.max_coefficient_diff = std::max(out.max_coefficient_diff, std::abs(fit.coefficients[k] - oracle[k]));
      out.max_z_mismatch =
          std::max(out.max_z_mismatch, std::abs(fit.z_values[k] - fit.coefficients[k] / fit.standard_errors[k]));
    }
    for (std::size_t s = 1; s < fit.log_likelihood.size(); ++s)
      if (fit.log_likelihood[s] < fit.log_likelihood[s - 1]) out.log_likelihood_monotone = false;
  }
  return out;
}

// --- brute-force ECDF ---------------------------------------------------------------

inline double ks_brute_force(const std::vector<double>& a, const std::vector<double>& b) {
  double best = 0.0;
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  for (double x : all) {
    const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [x](double v) { return v <= x; })) /
                      static_cast<double>(a.size());
    const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [x](double v) { return v <= x; })) /
                      static_cast<double>(b.size());
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

}  // namespace oracles
