#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rsd {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
using Index = Eigen::Index;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a loss, gradient or objective becomes non-finite. `operation`
// names the step that produced it.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string operation, const std::string& detail = {})
      : std::runtime_error("non-finite value in " + operation + (detail.empty() ? "" : ": " + detail)),
        operation_(std::move(operation)) {}
  const std::string& operation() const { return operation_; }

 private:
  std::string operation_;
};

// Seeded random source. The engine state round-trips through text so runs can
// resume bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  Scalar uniform(Scalar lo = 0.0, Scalar hi = 1.0) { return std::uniform_real_distribution<Scalar>(lo, hi)(engine_); }
  Scalar normal() { return std::normal_distribution<Scalar>(0.0, 1.0)(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::uint64_t next() { return engine_(); }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  std::mt19937_64& engine() { return engine_; }

  std::string save() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void load(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (!is) throw ConfigError("corrupt rng state");
  }

 private:
  std::mt19937_64 engine_;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& operation) {
  if (!m.allFinite()) throw NumericError(operation);
}

inline void require_finite(Scalar x, const std::string& operation) {
  if (!std::isfinite(x)) throw NumericError(operation);
}

}  // namespace rsd
