#include "interprobe/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace interprobe::hull {

Phase1Result phase1_simplex(const Eigen::MatrixXd& A, const Vector& b, const SimplexOptions& options) {
  const long m = A.rows();
  const long n = A.cols();
  if (b.size() != m) throw DimensionError("phase1_simplex: rhs length", m, b.size());
  if (!A.allFinite() || !b.allFinite()) throw ValidationError("phase1_simplex: non-finite input");

  Phase1Result result;
  result.x = Vector::Zero(n);
  if (m == 0) {
    result.feasible = true;
    return result;
  }

  // Negate rows with b_i < 0 so the all-artificial basis starts feasible.
  // The negation is applied on the fly: to the duals when pricing and to the
  // entering column before the ratio test.
  Vector sign(m);
  Vector rhs(m);
  for (long i = 0; i < m; ++i) {
    sign(i) = b(i) < 0.0 ? -1.0 : 1.0;
    rhs(i) = std::abs(b(i));
  }
  const double scale = std::max(1.0, n > 0 ? A.cwiseAbs().maxCoeff() : 0.0);
  const double cost_eps = 1e-10 * scale;
  const double pivot_eps = 1e-9;
  const long cap = options.max_iterations > 0 ? options.max_iterations : 50 * (m + n);

  // Column ids: structural [0, n), artificial n + i for row i. Artificials
  // that leave the basis never come back.
  std::vector<long> basis(static_cast<std::size_t>(m));
  std::iota(basis.begin(), basis.end(), n);
  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  Eigen::MatrixXd binv = Eigen::MatrixXd::Identity(m, m);
  Vector xb = rhs;
  Vector duals(m);
  Vector column(m);
  Vector direction(m);

  auto refactor = [&] {
    Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(m, m);
    for (long i = 0; i < m; ++i) {
      const long id = basis[static_cast<std::size_t>(i)];
      if (id < n)
        basis_matrix.col(i) = sign.cwiseProduct(A.col(id));
      else
        basis_matrix(id - n, i) = 1.0;
    }
    binv = basis_matrix.partialPivLu().inverse();
    xb = (binv * rhs).cwiseMax(0.0);
  };

  long iterations = 0;
  for (;;) {
    duals.setZero();
    for (long i = 0; i < m; ++i)
      if (basis[static_cast<std::size_t>(i)] >= n) duals += binv.row(i).transpose();
    duals = duals.cwiseProduct(sign);

    // Bland: the lowest-index column with a negative reduced cost enters.
    long entering = -1;
    for (long j = 0; j < n; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      if (-duals.dot(A.col(j)) < -cost_eps) {
        entering = j;
        break;
      }
    }
    if (entering < 0) break;
    if (iterations >= cap)
      throw ConvergenceError("phase1_simplex: iteration cap of " + std::to_string(cap) + " exceeded");

    column = sign.cwiseProduct(A.col(entering));
    direction.noalias() = binv * column;

    // Bland: among minimum-ratio rows, the basic variable with lowest id leaves.
    long leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (long i = 0; i < m; ++i) {
      if (direction(i) <= pivot_eps) continue;
      const double ratio = xb(i) / direction(i);
      if (leave < 0) {
        best = ratio;
        leave = i;
        continue;
      }
      const double tie = 1e-12 * (1.0 + std::abs(best));
      if (ratio < best - tie) {
        best = ratio;
        leave = i;
      } else if (ratio <= best + tie && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) {
        leave = i;
      }
    }
    if (leave < 0) throw Error("phase1_simplex: unbounded phase-1 direction (numerical breakdown)");

    const double step = xb(leave) / direction(leave);
    xb -= step * direction;
    xb(leave) = step;
    xb = xb.cwiseMax(0.0);
    const Eigen::RowVectorXd pivot_row = binv.row(leave) / direction(leave);
    binv.noalias() -= direction * pivot_row;
    binv.row(leave) = pivot_row;

    const long leaving = basis[static_cast<std::size_t>(leave)];
    if (leaving < n) in_basis[static_cast<std::size_t>(leaving)] = 0;
    basis[static_cast<std::size_t>(leave)] = entering;
    in_basis[static_cast<std::size_t>(entering)] = 1;
    ++iterations;
    if (iterations % options.refactor_every == 0) refactor();
  }

  double objective = 0.0;
  for (long i = 0; i < m; ++i) {
    const long id = basis[static_cast<std::size_t>(i)];
    if (id >= n)
      objective += xb(i);
    else
      result.x(id) = xb(i);
  }
  result.objective = objective;
  result.iterations = iterations;
  result.feasible = objective <= options.tolerance * (1.0 + b.cwiseAbs().maxCoeff());
  return result;
}

Vector HullCertificate::lambda(long n_generators) const {
  Vector out = Vector::Zero(n_generators);
  for (std::size_t k = 0; k < support.size(); ++k) out(support[k]) = weights[k];
  return out;
}

HullSolver::HullSolver(const Matrix& generators) {
  if (generators.rows() < 1) throw ValidationError("hull: need at least one generator");
  if (generators.cols() < 1) throw ValidationError("hull: generators need at least one dimension");
  if (!generators.allFinite()) throw ValidationError("hull: non-finite generator");
  system_.resize(generators.cols() + 1, generators.rows());
  system_.topRows(generators.cols()) = generators.transpose();
  system_.row(generators.cols()).setOnes();
}

HullCertificate HullSolver::certify(const Vector& query, double tolerance) const {
  const long d = dim();
  if (query.size() != d) throw DimensionError("hull query dimension", d, query.size());
  Vector rhs(d + 1);
  rhs.head(d) = query;
  rhs(d) = 1.0;
  SimplexOptions options;
  options.tolerance = tolerance;
  const auto lp = phase1_simplex(system_, rhs, options);

  HullCertificate cert;
  cert.iterations = lp.iterations;
  if (!lp.feasible) {
    cert.residual = lp.objective;
    return cert;
  }
  Vector combination = Vector::Zero(d);
  double total = 0.0;
  for (long j = 0; j < lp.x.size(); ++j) {
    if (lp.x(j) <= 0.0) continue;
    cert.support.push_back(j);
    cert.weights.push_back(lp.x(j));
    combination += lp.x(j) * system_.col(j).head(d);
    total += lp.x(j);
  }
  const double scale = 1.0 + (d > 0 ? query.cwiseAbs().maxCoeff() : 0.0);
  cert.residual = d > 0 ? (combination - query).cwiseAbs().maxCoeff() : 0.0;
  cert.inside = cert.residual <= tolerance * scale && std::abs(total - 1.0) <= tolerance;
  if (!cert.inside) {
    cert.support.clear();
    cert.weights.clear();
  }
  return cert;
}

HullCertificate in_hull(const HullQuery& query) {
  return HullSolver(query.generators).certify(query.query_point, query.tolerance);
}

HullFraction hull_fraction(const Matrix& test_points, const Matrix& train_points, const HullFractionOptions& options) {
  if (test_points.cols() != train_points.cols())
    throw DimensionError("hull_fraction: test vs train dimension", train_points.cols(), test_points.cols());
  HullFraction out;
  const Matrix* generators = &train_points;
  Matrix subset;
  if (options.max_generators > 0 && options.max_generators < train_points.rows()) {
    std::vector<long> idx(static_cast<std::size_t>(train_points.rows()));
    std::iota(idx.begin(), idx.end(), 0L);
    std::mt19937_64 rng(options.subsample_seed);
    for (std::size_t i = 0; i < static_cast<std::size_t>(options.max_generators); ++i) {
      const auto remaining = idx.size() - i;
      const auto j = i + static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * remaining) >> 64);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(options.max_generators));
    std::sort(idx.begin(), idx.end());
    subset = select_rows(train_points, idx);
    generators = &subset;
  }
  const HullSolver solver(*generators);
  out.generators_used = solver.size();
  const auto m = static_cast<std::size_t>(test_points.rows());
  out.certificates.resize(m);
  parallel_for(m, options.jobs, [&](std::size_t i) {
    out.certificates[i] = solver.certify(test_points.row(static_cast<long>(i)).transpose(), options.tolerance);
  });
  out.inside.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.inside[i] = out.certificates[i].inside;
  out.fraction = mean_flag(out.inside);
  return out;
}

}  // namespace interprobe::hull
