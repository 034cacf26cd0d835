#pragma once

#include "interprobe/common.hpp"
#include "interprobe/dataset.hpp"

#include <cstdint>
#include <vector>

namespace interprobe::hull {

struct SimplexOptions {
  /// Feasible iff the phase-1 optimum <= tolerance * (1 + |b|_inf).
  double tolerance = 1e-6;
  /// 0 selects 50 * (rows + columns).
  long max_iterations = 0;
  /// Basis inverse is recomputed from scratch this often.
  int refactor_every = 64;
};

struct Phase1Result {
  bool feasible = false;
  /// Nonnegative solution of A x = b (meaningful when feasible).
  Vector x;
  /// Sum of artificial variables at the phase-1 optimum.
  double objective = 0.0;
  long iterations = 0;
};

/// Phase-1 revised simplex for {x >= 0 : A x = b}. Rows with negative b are
/// negated, one artificial per row starts the basis, and both entering and
/// leaving choices follow Bland's rule. Throws ConvergenceError when the
/// iteration cap is hit and ValidationError on non-finite input.
Phase1Result phase1_simplex(const Eigen::MatrixXd& A, const Vector& b, const SimplexOptions& options = {});

struct HullCertificate {
  bool inside = false;
  /// Generators with positive weight and their weights (empty when outside).
  std::vector<long> support;
  std::vector<double> weights;
  /// |sum w_i x_i - q|_inf when inside; phase-1 optimum when outside.
  double residual = 0.0;
  long iterations = 0;

  /// Dense weight vector over `n_generators`.
  Vector lambda(long n_generators) const;
};

struct HullQuery {
  Vector query_point;
  /// One generator (training point) per row.
  Matrix generators;
  double tolerance = 1e-6;
};

/// Reusable membership oracle for one generator set.
class HullSolver {
 public:
  explicit HullSolver(const Matrix& generators);

  long size() const { return system_.cols(); }
  long dim() const { return system_.rows() - 1; }

  HullCertificate certify(const Vector& query, double tolerance = 1e-6) const;

 private:
  Eigen::MatrixXd system_;  // generators as columns with a row of ones appended
};

HullCertificate in_hull(const HullQuery& query);

struct HullFraction {
  double fraction = 0.0;
  Flags inside;
  std::vector<HullCertificate> certificates;
  /// Number of generators actually used.
  long generators_used = 0;
};

struct HullFractionOptions {
  double tolerance = 1e-6;
  int jobs = 1;
  /// Uniformly subsample this many generators (0 keeps all).
  long max_generators = 0;
  std::uint64_t subsample_seed = 0;
};

/// Tests every row of `test_points` against the hull of `train_points`.
HullFraction hull_fraction(const Matrix& test_points, const Matrix& train_points, const HullFractionOptions& options = {});

}  // namespace interprobe::hull
