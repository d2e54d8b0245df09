#ifndef QEXP_PARAMS_HPP
#define QEXP_PARAMS_HPP

#include <cmath>
#include <string>

#include "qexp/errors.hpp"

namespace qexp {

/// Shape/scale parameterization: survival (1 + x/sigma)^(-theta).
/// Only theta > 0 is representable.
class ThetaSigma {
 public:
  ThetaSigma(double theta, double sigma) : theta_(theta), sigma_(sigma) {
    if (!std::isfinite(theta) || !(theta > 0.0)) {
      throw InvalidParameter("theta must be finite and > 0, got " + std::to_string(theta));
    }
    if (!std::isfinite(sigma) || !(sigma > 0.0)) {
      throw InvalidParameter("sigma must be finite and > 0, got " + std::to_string(sigma));
    }
  }

  double theta() const noexcept { return theta_; }
  double sigma() const noexcept { return sigma_; }

  friend bool operator==(const ThetaSigma&, const ThetaSigma&) = default;

 private:
  double theta_;
  double sigma_;
};

/// Tsallis parameterization: survival (1 - (1-q) x / kappa)^(1/(1-q)), q > 1.
class QKappa {
 public:
  QKappa(double q, double kappa) : q_(q), kappa_(kappa) {
    if (!std::isfinite(q)) throw InvalidParameter("q must be finite");
    if (!(q > 1.0)) {
      throw UnsupportedBranch("q <= 1 (bounded support) is not supported, got q = " +
                              std::to_string(q));
    }
    if (!std::isfinite(kappa) || !(kappa > 0.0)) {
      throw InvalidParameter("kappa must be finite and > 0, got " + std::to_string(kappa));
    }
  }

  double q() const noexcept { return q_; }
  double kappa() const noexcept { return kappa_; }

  friend bool operator==(const QKappa&, const QKappa&) = default;

 private:
  double q_;
  double kappa_;
};

/// A probability in [0, 1].
class UnitInterval {
 public:
  explicit UnitInterval(double p) : p_(p) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("probability must lie in [0, 1], got " + std::to_string(p));
    }
  }

  double value() const noexcept { return p_; }
  operator double() const noexcept { return p_; }

 private:
  double p_;
};

// theta = 1/(q-1), sigma = kappa/(q-1).
inline ThetaSigma to_theta_sigma(const QKappa& p) {
  const double qm1 = p.q() - 1.0;
  return ThetaSigma(1.0 / qm1, p.kappa() / qm1);
}

// q = 1 + 1/theta, kappa = sigma/theta.
inline QKappa to_q_kappa(const ThetaSigma& p) {
  return QKappa(1.0 + 1.0 / p.theta(), p.sigma() / p.theta());
}

}  // namespace qexp

#endif  // QEXP_PARAMS_HPP
