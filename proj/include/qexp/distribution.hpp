#ifndef QEXP_DISTRIBUTION_HPP
#define QEXP_DISTRIBUTION_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qexp/errors.hpp"
#include "qexp/params.hpp"
#include "qexp/rng.hpp"
#include "qexp/sample.hpp"

namespace qexp {

/// P(X >= x) = (1 + x/sigma)^(-theta).
inline UnitInterval survival(const ThetaSigma& p, double x) {
  if (!(x >= 0.0)) throw DomainError("survival: x must be >= 0, got " + std::to_string(x));
  return UnitInterval(std::exp(-p.theta() * std::log1p(x / p.sigma())));
}

/// Lower CDF, 1 - survival(x), computed without cancellation for small x.
inline double cdf(const ThetaSigma& p, double x) {
  if (!(x >= 0.0)) throw DomainError("cdf: x must be >= 0, got " + std::to_string(x));
  return -std::expm1(-p.theta() * std::log1p(x / p.sigma()));
}

/// log p(x) = log(theta/sigma) - (theta+1) log(1 + x/sigma); -inf off support.
inline double log_density(const ThetaSigma& p, double x) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(p.theta() / p.sigma()) - (p.theta() + 1.0) * std::log1p(x / p.sigma());
}

// Returns 0 off the support rather than throwing, so it can sit inside
// quadrature loops.
inline double density(const ThetaSigma& p, double x) {
  if (x < 0.0) return 0.0;
  return std::exp(log_density(p, x));
}

/// The x with survival(x) == s. s == 0 maps to +inf.
inline double quantile(const ThetaSigma& p, UnitInterval s) {
  if (s.value() == 0.0) return std::numeric_limits<double>::infinity();
  return p.sigma() * std::expm1(-std::log(s.value()) / p.theta());
}

/// Conditional survival P(X >= x | X >= x0) = ((sigma+x)/(sigma+x0))^(-theta).
inline double tail_survival(const ThetaSigma& p, double x0, double x) {
  if (x < x0) return 1.0;
  return std::exp(-p.theta() * std::log1p((x - x0) / (p.sigma() + x0)));
}

inline double tail_cdf(const ThetaSigma& p, double x0, double x) {
  if (x < x0) return 0.0;
  return -std::expm1(-p.theta() * std::log1p((x - x0) / (p.sigma() + x0)));
}

/// n inverse-transform draws.
inline Sample sample(const ThetaSigma& p, std::size_t n, const RngStream& rng) {
  auto eng = rng.engine();
  std::vector<double> out(n);
  for (auto& x : out) x = quantile(p, UnitInterval(uniform_open_closed(eng)));
  return Sample(std::move(out));
}

/// n draws from X | X >= x0. With x0 == 0 this reproduces sample() exactly.
inline Sample sample_tail(const ThetaSigma& p, double x0, std::size_t n, const RngStream& rng) {
  if (!(x0 >= 0.0) || !std::isfinite(x0)) {
    throw DomainError("sample_tail: x0 must be finite and >= 0, got " + std::to_string(x0));
  }
  // X - x0 | X >= x0 is q-exponential with the same theta and scale sigma + x0.
  const double scale = p.sigma() + x0;
  auto eng = rng.engine();
  std::vector<double> out(n);
  for (auto& x : out) {
    const double u = uniform_open_closed(eng);
    x = x0 + scale * std::expm1(-std::log(u) / p.theta());
  }
  return Sample(std::move(out), x0);
}

/// Exponential with mean sigma/Z, Z ~ Gamma(theta, 1). Marginally the same law
/// as sample(); kept as an independent check on the inverse-transform path.
inline Sample sample_gamma_mixture(const ThetaSigma& p, std::size_t n, const RngStream& rng) {
  auto eng = rng.engine();
  std::gamma_distribution<double> rate(p.theta(), 1.0);
  std::vector<double> out(n);
  for (auto& x : out) {
    const double z = rate(eng);
    const double e = -std::log(uniform_open_closed(eng));
    x = e * p.sigma() / z;
    if (!std::isfinite(x)) x = std::numeric_limits<double>::max();
  }
  return Sample(std::move(out));
}

}  // namespace qexp

#endif  // QEXP_DISTRIBUTION_HPP
