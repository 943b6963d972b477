#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fiagree {

// Row-major so that a single row is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowView = std::span<const double>;

inline RowView row_view(const Matrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Bit j set means "feature j takes the explained row's value".
using Mask = std::uint64_t;
inline constexpr std::size_t kMaxMaskFeatures = 64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: ingestion failures, dataset contract violations.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad arguments or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Internal invariant violated; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace fiagree
