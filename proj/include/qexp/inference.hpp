#ifndef QEXP_INFERENCE_HPP
#define QEXP_INFERENCE_HPP

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>

#include <boost/math/distributions/normal.hpp>

#include "qexp/errors.hpp"
#include "qexp/estimation.hpp"
#include "qexp/params.hpp"
#include "qexp/sample.hpp"

namespace qexp {

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double det() const noexcept { return xx * yy - xy * xy; }
  double trace() const noexcept { return xx + yy; }
  double frobenius() const noexcept { return std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy); }

  Sym2 inverse() const {
    const double d = det();
    if (!(d != 0.0) || !std::isfinite(d)) throw IllConditioned("2x2 matrix is singular");
    return {yy / d, -xy / d, xx / d};
  }

  Sym2 scaled(double c) const noexcept { return {xx * c, xy * c, yy * c}; }

  friend Sym2 operator-(const Sym2& a, const Sym2& b) noexcept {
    return {a.xx - b.xx, a.xy - b.xy, a.yy - b.yy};
  }
};

/// General 2x2 matrix, row-major.
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  // M * S * M^T
  Sym2 congruence(const Sym2& s) const noexcept {
    // rows of M*S
    const double r00 = a * s.xx + b * s.xy, r01 = a * s.xy + b * s.yy;
    const double r10 = c * s.xx + d * s.xy, r11 = c * s.xy + d * s.yy;
    return {r00 * a + r01 * b, r00 * c + r01 * d, r10 * c + r11 * d};
  }

  Mat2 transpose() const noexcept { return {a, c, b, d}; }

  Mat2 inverse() const {
    const double det = a * d - b * c;
    if (!(det != 0.0) || !std::isfinite(det)) throw IllConditioned("2x2 Jacobian is singular");
    return {d / det, -b / det, -c / det, a / det};
  }
};

enum class Coords { theta_sigma, q_kappa };
enum class InfoKind { expected, observed };

inline std::string_view to_string(InfoKind k) {
  return k == InfoKind::expected ? "expected" : "observed";
}

/// Per-observation information matrix in the given coordinates.
struct InfoMatrix {
  Sym2 entries;
  Coords coords = Coords::theta_sigma;
  InfoKind kind = InfoKind::expected;

  bool positive_definite() const noexcept { return entries.det() > 0.0 && entries.trace() > 0.0; }
};

/// Expected (Fisher) information per observation:
///   [[1/theta^2, -1/((theta+1) sigma)], [., theta/(sigma^2 (theta+2))]].
inline InfoMatrix fisher_information(const ThetaSigma& p) {
  const double t = p.theta();
  const double s = p.sigma();
  return {{1.0 / (t * t), -1.0 / ((t + 1.0) * s), t / (s * s * (t + 2.0))},
          Coords::theta_sigma,
          InfoKind::expected};
}

// Conditioning on X >= x0 leaves the information of an uncensored law with
// scale sigma + x0.
inline InfoMatrix fisher_information_censored(const ThetaSigma& p, double x0) {
  if (!(x0 >= 0.0) || !std::isfinite(x0)) throw DomainError("x0 must be finite and >= 0");
  return fisher_information(ThetaSigma(p.theta(), p.sigma() + x0));
}

/// J = -(1/n) Hessian of the (censored, if x0 > 0) log-likelihood, analytic.
inline InfoMatrix observed_information(const Sample& s, const ThetaSigma& p) {
  const double n = static_cast<double>(s.size());
  const double t = p.theta();
  const double sg = p.sigma();
  const double x0 = s.x0();

  double cross = 0.0;  // sum x/(sigma (sigma + x))
  double curv = 0.0;   // sum x (2 sigma + x) / (sigma^2 (sigma + x)^2)
  for (double x : s.values()) {
    const double sx = sg + x;
    cross += x / (sg * sx);
    curv += x * (2.0 * sg + x) / (sg * sg * sx * sx);
  }
  const double s0 = sg + x0;
  const double h_tt = -n / (t * t);
  const double h_ts = cross - n * x0 / (sg * s0);
  const double h_ss =
      n / (sg * sg) - (t + 1.0) * curv + n * t * x0 * (2.0 * sg + x0) / (sg * sg * s0 * s0);
  return {{-h_tt / n, -h_ts / n, -h_ss / n}, Coords::theta_sigma, InfoKind::observed};
}

/// d(q, kappa)/d(theta, sigma) = [[-1/theta^2, 0], [-sigma/theta^2, 1/theta]].
inline Mat2 q_kappa_jacobian(const ThetaSigma& p) {
  const double t = p.theta();
  return {-1.0 / (t * t), 0.0, -p.sigma() / (t * t), 1.0 / t};
}

/// Re-expresses a (theta, sigma) information matrix in (q, kappa) coordinates:
/// K^T I K with K = d(theta, sigma)/d(q, kappa).
inline InfoMatrix to_q_kappa_coords(const InfoMatrix& info, const ThetaSigma& p) {
  if (info.coords != Coords::theta_sigma) throw InvalidParameter("information already in (q, kappa)");
  const Mat2 k = q_kappa_jacobian(p).inverse();
  return {k.transpose().congruence(info.entries), Coords::q_kappa, info.kind};
}

/// Two-sided standard normal quantile z with P(|Z| <= z) = level.
inline double normal_two_sided_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Which parameter, if any, was held fixed when fitting.
enum class FixedParam { none, theta, sigma };

struct CovarianceReport {
  Sym2 cov;     // (theta, sigma)
  Sym2 cov_qk;  // (q, kappa), delta method
  double se_theta = 0.0, se_sigma = 0.0, se_q = 0.0, se_kappa = 0.0;
  double ci_level = 0.9;
  double z = 0.0;
  InfoKind kind = InfoKind::expected;
  Interval ci_theta, ci_sigma, ci_q, ci_kappa;  // Wald, symmetric
};

namespace detail {

inline Interval wald(double est, double se, double z) { return {est - z * se, est + z * se}; }

inline CovarianceReport finish_report(Sym2 cov, const ThetaSigma& p, InfoKind kind, double level) {
  CovarianceReport r;
  r.cov = cov;
  r.cov_qk = q_kappa_jacobian(p).congruence(cov);
  r.se_theta = std::sqrt(r.cov.xx);
  r.se_sigma = std::sqrt(r.cov.yy);
  r.se_q = std::sqrt(r.cov_qk.xx);
  r.se_kappa = std::sqrt(r.cov_qk.yy);
  r.ci_level = level;
  r.z = normal_two_sided_z(level);
  r.kind = kind;
  const QKappa qk = to_q_kappa(p);
  r.ci_theta = wald(p.theta(), r.se_theta, r.z);
  r.ci_sigma = wald(p.sigma(), r.se_sigma, r.z);
  r.ci_q = wald(qk.q(), r.se_q, r.z);
  r.ci_kappa = wald(qk.kappa(), r.se_kappa, r.z);
  return r;
}

}  // namespace detail

/// Asymptotic covariance (1/n) info^{-1} at the fit, standard errors and Wald
/// intervals in both parameterizations. A fixed parameter gets zero variance
/// and the free one uses its own diagonal information entry.
inline CovarianceReport covariance_report(const Sample& s, const FitResult& fit,
                                          InfoKind kind = InfoKind::expected, double level = 0.90,
                                          FixedParam fixed = FixedParam::none) {
  if (!fit.converged) throw ConvergenceError("covariance_report: fit did not converge");
  if (!fit.interior()) {
    throw ConvergenceError(std::string("covariance_report: fit is at the ") +
                           std::string(to_string(fit.boundary_flag)) +
                           "; asymptotic covariance is not available");
  }
  const InfoMatrix info = kind == InfoKind::expected
                              ? fisher_information_censored(fit.params, s.x0())
                              : observed_information(s, fit.params);
  const std::string name = kind == InfoKind::expected ? "expected information" : "observed information";
  const double n = static_cast<double>(s.size());

  Sym2 cov;
  switch (fixed) {
    case FixedParam::none:
      if (!info.positive_definite()) {
        throw IllConditioned(name + " matrix is not positive definite (det = " +
                             std::to_string(info.entries.det()) + ")");
      }
      cov = info.entries.inverse().scaled(1.0 / n);
      break;
    case FixedParam::theta:
      if (!(info.entries.yy > 0.0)) throw IllConditioned(name + " sigma-sigma entry is not positive");
      cov = {0.0, 0.0, 1.0 / (n * info.entries.yy)};
      break;
    case FixedParam::sigma:
      if (!(info.entries.xx > 0.0)) throw IllConditioned(name + " theta-theta entry is not positive");
      cov = {1.0 / (n * info.entries.xx), 0.0, 0.0};
      break;
  }
  return detail::finish_report(cov, fit.params, kind, level);
}

}  // namespace qexp

#endif  // QEXP_INFERENCE_HPP
