#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace interprobe {

// Row-major so that one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible matrix or vector shapes.
class DimensionError : public Error {
 public:
  DimensionError(std::string_view what, long expected, long actual);
  long expected() const { return expected_; }
  long actual() const { return actual_; }

 private:
  long expected_;
  long actual_;
};

/// Invalid argument or configuration value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operation refused on a network whose parameters are frozen (or, for the
/// hybrid probe, on a network that is not frozen).
class FrozenError : public Error {
 public:
  using Error::Error;
};

/// A class label outside [0, n_classes).
class LabelError : public Error {
 public:
  LabelError(long row, long label, long n_classes);
  long row() const { return row_; }

 private:
  long row_;
};

/// Malformed binary input (IDX or NACT).
class FormatError : public Error {
 public:
  enum class Kind { io, magic_mismatch, truncated, count_mismatch, version_mismatch, length_inconsistency };
  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Iterative solver gave up.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// --- seeding -------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a, used to turn stream tags into integers.
std::uint64_t fnv1a(std::string_view text);

/// Derives an independent stream seed from a root seed and a path of ids.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::initializer_list<std::uint64_t> path = {});

// --- parallelism ---------------------------------------------------------

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Tasks must write to
/// disjoint outputs; the first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Rows of `m` selected by `rows`, in order.
Matrix select_rows(const Matrix& m, const std::vector<long>& rows);

}  // namespace interprobe
