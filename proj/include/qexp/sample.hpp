#ifndef QEXP_SAMPLE_HPP
#define QEXP_SAMPLE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qexp/errors.hpp"

namespace qexp {

/// Observations on [0, inf), optionally left-censored at x0: only values
/// >= x0 were recorded. x0 == 0 means uncensored.
class Sample {
 public:
  explicit Sample(std::vector<double> values, double x0 = 0.0)
      : values_(std::move(values)), x0_(x0) {
    if (!std::isfinite(x0_) || x0_ < 0.0) {
      throw DataError("censoring threshold must be finite and >= 0, got " + std::to_string(x0_));
    }
    if (values_.empty()) throw DataError("sample is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      if (!std::isfinite(v)) {
        throw DataError("value #" + std::to_string(i + 1) + " is not finite");
      }
      if (v < 0.0) {
        throw DataError("value #" + std::to_string(i + 1) + " is negative: " + std::to_string(v));
      }
      if (v < x0_) {
        throw DataError("value #" + std::to_string(i + 1) + " = " + std::to_string(v) +
                        " lies below the censoring threshold " + std::to_string(x0_));
      }
    }
  }

  std::span<const double> values() const noexcept { return values_; }
  double x0() const noexcept { return x0_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool censored() const noexcept { return x0_ > 0.0; }

  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
  double x0_;
};

}  // namespace qexp

#endif  // QEXP_SAMPLE_HPP
