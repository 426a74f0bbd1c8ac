#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace svr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One sample or curve node per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A nonnegative extent that may be infinite (reach of a straight line,
// an output clip that is switched off). Kept distinct from a large double
// so callers have to handle the unbounded case explicitly.
class Bound {
 public:
  static Bound unbounded() { return Bound(); }
  explicit Bound(double v) : value_(v), bounded_(true) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("Bound: value must be finite and >= 0");
  }

  bool is_unbounded() const { return !bounded_; }
  bool is_bounded() const { return bounded_; }
  double value() const {
    if (!bounded_) throw Error("Bound: value() on an unbounded extent");
    return value_;
  }
  double value_or(double fallback) const { return bounded_ ? value_ : fallback; }
  // Infinity for the unbounded case; convenient for arithmetic comparisons.
  double as_double() const { return bounded_ ? value_ : std::numeric_limits<double>::infinity(); }

  friend bool operator==(const Bound& a, const Bound& b) {
    return a.bounded_ == b.bounded_ && (!a.bounded_ || a.value_ == b.value_);
  }

 private:
  Bound() = default;
  double value_ = 0.0;
  bool bounded_ = false;
};

}  // namespace svr
