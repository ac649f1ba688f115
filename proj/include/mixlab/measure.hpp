#pragma once

#include "mixlab/rational.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>

namespace mixlab {

/// Raised when a computation exceeds what an exact method can handle
/// (window cap, missing oracle capability). Distinct from bad input.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

/// A probability that is known exactly, estimated, or both.
class MeasureValue {
 public:
  static MeasureValue exact(Rational value) {
    if (value < 0 || value > 1) throw std::invalid_argument("exact measure outside [0,1]");
    MeasureValue m;
    m.exact_ = std::move(value);
    return m;
  }
  static MeasureValue estimated(Estimate e) {
    MeasureValue m;
    m.estimate_ = e;
    return m;
  }

  bool is_exact() const { return exact_.has_value(); }
  const std::optional<Rational>& exact_value() const { return exact_; }
  const std::optional<Estimate>& estimate() const { return estimate_; }

  /// Exact value if present, otherwise the estimated mean.
  double value() const { return exact_ ? to_double(*exact_) : estimate_->mean; }
  double std_error() const { return exact_ ? 0.0 : estimate_->std_error; }

 private:
  MeasureValue() = default;
  std::optional<Rational> exact_;
  std::optional<Estimate> estimate_;
};

}  // namespace mixlab
