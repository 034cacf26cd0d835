#include "doctest.h"

#include "interprobe/data.hpp"
#include "interprobe/hull.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>

using namespace interprobe;
using namespace interprobe::hull;

namespace {

void check_certificate(const HullCertificate& cert, const Matrix& gens, const Vector& q, double tol) {
  if (!cert.inside) return;
  const Vector lambda = cert.lambda(gens.rows());
  CHECK(lambda.minCoeff() >= 0.0);
  CHECK(std::abs(lambda.sum() - 1.0) <= tol);
  const Vector rebuilt = gens.transpose() * lambda;
  CHECK((rebuilt - q).cwiseAbs().maxCoeff() <= tol * (1 + q.cwiseAbs().maxCoeff()));
}

}  // namespace

TEST_SUITE("hull.simplex") {
  TEST_CASE("one-by-one system") {
    const auto r = phase1_simplex(Eigen::MatrixXd::Constant(1, 1, 1.0), Vector::Constant(1, 1.0));
    CHECK(r.feasible);
    CHECK(r.x(0) == doctest::Approx(1.0));
  }

  TEST_CASE("query outside a 1D hull is infeasible") {
    Eigen::MatrixXd A(2, 2);
    A << 0.0, 1.0, 1.0, 1.0;
    Vector b(2);
    b << 2.0, 1.0;
    const auto r = phase1_simplex(A, b);
    CHECK_FALSE(r.feasible);
    CHECK(r.objective >= 1.0 - 1e-6);
  }

  TEST_CASE("non-finite input and iteration cap") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Ones(2, 3);
    A(0, 1) = std::nan("");
    CHECK_THROWS_AS(phase1_simplex(A, Vector::Ones(2)), ValidationError);
    Eigen::MatrixXd B(2, 2);
    B << 1.0, 2.0, 3.0, 1.0;
    SimplexOptions opts;
    opts.max_iterations = 1;
    CHECK_THROWS_AS(phase1_simplex(B, Vector::Ones(2), opts), ConvergenceError);
  }

  TEST_CASE("agrees with basic-solution enumeration on small systems") {
    const auto r = oracles::simplex_sweep(200, 31);
    MESSAGE("simplex vs enumeration: " << r.agree << "/" << r.cases << " agree, " << r.positive << " feasible");
    CHECK(r.agree == r.cases);
    CHECK(r.bad_certificates == 0);
    CHECK(r.positive > 40);
    CHECK(r.positive < 160);
  }
}

TEST_SUITE("hull.membership") {
  TEST_CASE("generators are inside with an indicator-like certificate") {
    std::mt19937_64 rng(4);
    const Matrix gens = testutil::random_matrix(12, 5, rng);
    HullSolver solver(gens);
    for (long j = 0; j < gens.rows(); ++j) {
      const Vector q = gens.row(j).transpose();
      const auto cert = solver.certify(q);
      CHECK(cert.inside);
      check_certificate(cert, gens, q, 1e-6);
    }
  }

  TEST_CASE("1D hull of {0, 1}") {
    Matrix gens(2, 1);
    gens << 0.0, 1.0;
    CHECK(in_hull({Vector::Constant(1, 0.5), gens, 1e-6}).inside);
    CHECK_FALSE(in_hull({Vector::Constant(1, 1.5), gens, 1e-6}).inside);
    CHECK(in_hull({Vector::Constant(1, 1.0 + 1e-9), gens, 1e-6}).inside);
  }

  TEST_CASE("dimension mismatch") {
    HullSolver solver(Matrix::Zero(3, 2));
    CHECK_THROWS_AS(solver.certify(Vector::Zero(3)), DimensionError);
  }

  TEST_CASE("agrees with the 2D orientation oracle near the boundary") {
    const auto r = oracles::hull2d_sweep(200, 77);
    MESSAGE("2D oracle: " << r.agree << "/" << r.cases << " agree, " << r.positive << " inside");
    CHECK(r.agree == r.cases);
    CHECK(r.bad_certificates == 0);
    CHECK(r.positive > 50);
    CHECK(r.positive < 150);
  }

  TEST_CASE("verdicts are invariant under rigid motions and scaling") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
      const int dim = testutil::uniform_int(rng, 2, 6);
      const int n = testutil::uniform_int(rng, dim + 1, 25);
      const Matrix gens = testutil::random_matrix(n, dim, rng);
      const Matrix queries = testutil::random_matrix(10, dim, rng, 0.8);
      const Matrix rot = data::random_orthogonal(dim, static_cast<std::uint64_t>(trial));
      const RowVector shift = testutil::random_matrix(1, dim, rng, 5.0);
      const Matrix gens2 = ((gens * rot).rowwise() + shift) * 3.0;
      const Matrix queries2 = ((queries * rot).rowwise() + shift) * 3.0;
      const auto before = hull_fraction(queries, gens);
      const auto after = hull_fraction(queries2, gens2);
      for (long i = 0; i < queries.rows(); ++i) {
        // Skip verdicts inside the tolerance band, where rounding may decide.
        const bool borderline = before.certificates[static_cast<std::size_t>(i)].inside
                                    ? false
                                    : before.certificates[static_cast<std::size_t>(i)].residual < 1e-4;
        if (!borderline) CHECK(before.inside[static_cast<std::size_t>(i)] == after.inside[static_cast<std::size_t>(i)]);
      }
    }
  }

  TEST_CASE("adding generators never removes membership") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
      const int dim = testutil::uniform_int(rng, 2, 5);
      const Matrix gens = testutil::random_matrix(30, dim, rng);
      const Matrix queries = testutil::random_matrix(20, dim, rng);
      const auto small = hull_fraction(queries, gens.topRows(12));
      const auto large = hull_fraction(queries, gens);
      for (std::size_t i = 0; i < small.inside.size(); ++i)
        if (small.inside[i]) CHECK(large.inside[i]);
      CHECK(large.fraction >= small.fraction);
    }
  }

  TEST_CASE("test points equal to training points are all inside") {
    std::mt19937_64 rng(12);
    const Matrix pts = testutil::random_matrix(40, 6, rng);
    const auto res = hull_fraction(pts, pts, {.jobs = 2});
    CHECK(res.fraction == 1.0);
    for (std::size_t i = 0; i < res.certificates.size(); ++i)
      check_certificate(res.certificates[i], pts, pts.row(static_cast<long>(i)).transpose(), 1e-6);
  }

  TEST_CASE("inside fraction collapses with dimension") {
    std::mt19937_64 rng(13);
    const Matrix low_train = testutil::random_matrix(1000, 2, rng);
    const Matrix low_test = testutil::random_matrix(200, 2, rng);
    const Matrix high_train = testutil::random_matrix(1000, 30, rng);
    const Matrix high_test = testutil::random_matrix(200, 30, rng);
    const double low = hull_fraction(low_test, low_train).fraction;
    const double high = hull_fraction(high_test, high_train).fraction;
    MESSAGE("inside fraction D=2: " << low << ", D=30: " << high);
    CHECK(low >= 0.9);
    CHECK(high <= 0.1);
  }

  TEST_CASE("embedded tuning-curve test points leave the training hull") {
    for (const auto& demo : {data::tuning_demo_1d(), data::tuning_demo_2d()}) {
      const auto intrinsic = hull_fraction(demo.test_intrinsic, demo.train_intrinsic);
      const auto embedded = hull_fraction(demo.test_embedded, demo.train_embedded);
      MESSAGE(demo.name << ": intrinsic " << intrinsic.fraction << ", embedded " << embedded.fraction);
      CHECK(intrinsic.fraction == 1.0);
      CHECK(embedded.fraction == 0.0);
    }
  }

  TEST_CASE("subsampling reports the generators used and is seed-stable") {
    std::mt19937_64 rng(14);
    const Matrix train = testutil::random_matrix(200, 3, rng);
    const Matrix test = testutil::random_matrix(30, 3, rng);
    HullFractionOptions opts;
    opts.max_generators = 50;
    opts.subsample_seed = 3;
    const auto a = hull_fraction(test, train, opts);
    const auto b = hull_fraction(test, train, opts);
    CHECK(a.generators_used == 50);
    CHECK(a.inside == b.inside);
    CHECK(hull_fraction(test, train).generators_used == 200);
  }
}
