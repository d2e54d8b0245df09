#ifndef QEXP_ESTIMATION_HPP
#define QEXP_ESTIMATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/detail/profile_search.hpp"
#include "qexp/errors.hpp"
#include "qexp/params.hpp"
#include "qexp/sample.hpp"

namespace qexp {

struct SolverConfig {
  double rel_tol = 1e-10;             // bound on the estimating-equation residual
  std::size_t max_iter = 200;         // per scalar root refinement
  double sigma_bracket_factor = 10.0; // initial bracket: median(x) / f .. median(x) * f
  double sigma_max_factor = 1e6;      // sigma may grow to this multiple of max(x)

  void validate() const {
    if (!(rel_tol > 0.0)) throw InvalidParameter("SolverConfig: rel_tol must be > 0");
    if (max_iter < 1) throw InvalidParameter("SolverConfig: max_iter must be >= 1");
    if (!(sigma_bracket_factor > 1.0)) {
      throw InvalidParameter("SolverConfig: sigma_bracket_factor must be > 1");
    }
    if (!(sigma_max_factor > 1.0) || !std::isfinite(sigma_max_factor)) {
      throw InvalidParameter("SolverConfig: sigma_max_factor must be finite and > 1");
    }
  }
};

// Where the scale search stopped. The upper bound is the exponential limit
// (sigma -> inf at fixed theta/sigma); the lower bound is the Pareto limit
// for censored data, or a spike at zero for data with many exact zeros.
enum class BoundaryFlag { interior, sigma_upper_bound, sigma_lower_bound };

inline std::string_view to_string(BoundaryFlag f) {
  switch (f) {
    case BoundaryFlag::interior: return "interior";
    case BoundaryFlag::sigma_upper_bound: return "sigma_upper_bound";
    case BoundaryFlag::sigma_lower_bound: return "sigma_lower_bound";
  }
  return "unknown";
}

struct FitResult {
  ThetaSigma params;
  QKappa params_qk;
  double loglik = 0.0;  // nats; censored log-likelihood when the sample is censored
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;  // |sigma - RHS(sigma)| / sigma of the sigma estimating equation
  BoundaryFlag boundary_flag = BoundaryFlag::interior;

  bool interior() const noexcept { return boundary_flag == BoundaryFlag::interior; }
};

/// l(theta, sigma) = -n log sigma + n log theta - (theta+1) sum log(1 + x_i/sigma).
/// The censoring threshold is ignored; see censored_log_likelihood.
inline double log_likelihood(const Sample& s, const ThetaSigma& p) {
  const double n = static_cast<double>(s.size());
  double sum_log = 0.0;
  for (double x : s.values()) sum_log += std::log1p(x / p.sigma());
  return -n * std::log(p.sigma()) + n * std::log(p.theta()) - (p.theta() + 1.0) * sum_log;
}

/// Log-likelihood conditional on X >= x0: l + n theta log(1 + x0/sigma).
inline double censored_log_likelihood(const Sample& s, const ThetaSigma& p) {
  const double n = static_cast<double>(s.size());
  return log_likelihood(s, p) + n * p.theta() * std::log1p(s.x0() / p.sigma());
}

namespace detail {

// sum log((1 + x_i/sigma) / (1 + x0/sigma)), written as log1p((x_i - x0)/(sigma + x0)).
inline double tail_log_sum(const Sample& s, double sigma) {
  const double x0 = s.x0();
  const double scale = sigma + x0;
  double sum = 0.0;
  for (double x : s.values()) sum += std::log1p((x - x0) / scale);
  return sum;
}

// sigma * d l_C / d sigma at (theta, sigma):
//   -n + (theta+1) sum x_i/(sigma+x_i) - n theta x0/(sigma+x0).
inline double sigma_score(const Sample& s, double theta, double sigma) {
  const double n = static_cast<double>(s.size());
  double sum = 0.0;
  for (double x : s.values()) sum += x / (sigma + x);
  const double x0 = s.x0();
  return -n + (theta + 1.0) * sum - n * theta * x0 / (sigma + x0);
}

inline double median_of(std::span<const double> v) {
  std::vector<double> tmp(v.begin(), v.end());
  const auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  double m = *mid;
  if (tmp.size() % 2 == 0) m = 0.5 * (m + *std::max_element(tmp.begin(), mid));
  return m;
}

// Starting point for the scale bracket: the sample median, or the mean when
// more than half of the data sit at zero.
inline double scale_anchor(const Sample& s) {
  const double med = median_of(s.values());
  if (med > 0.0) return med;
  const auto v = s.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline ScaleSearchOptions scale_search_options(const Sample& s, const SolverConfig& cfg) {
  const auto v = s.values();
  const double max_x = *std::max_element(v.begin(), v.end());
  ScaleSearchOptions opt;
  opt.anchor = scale_anchor(s);
  opt.bracket_factor = cfg.sigma_bracket_factor;
  opt.floor = max_x * 1e-12;
  opt.ceiling = max_x * cfg.sigma_max_factor;
  opt.max_iter = cfg.max_iter;
  return opt;
}

inline BoundaryFlag to_boundary_flag(SearchBound b) {
  switch (b) {
    case SearchBound::lower: return BoundaryFlag::sigma_lower_bound;
    case SearchBound::upper: return BoundaryFlag::sigma_upper_bound;
    case SearchBound::interior: break;
  }
  return BoundaryFlag::interior;
}

inline bool all_equal(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace detail

/// Relative residual |sigma - RHS(sigma)|/sigma of the sigma estimating
/// equation (censored form; reduces to the plain form at x0 = 0). Equal to
/// |sigma * dl/dsigma| / n.
inline double sigma_equation_residual(const Sample& s, const ThetaSigma& p) {
  return std::abs(detail::sigma_score(s, p.theta(), p.sigma())) / static_cast<double>(s.size());
}

/// theta_hat = n / sum log((1 + x_i/sigma)/(1 + x0/sigma)); with x0 = 0 this is
/// n / sum log(1 + x_i/sigma).
inline double mle_theta_given_sigma(const Sample& s, double sigma) {
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    throw InvalidParameter("mle_theta_given_sigma: sigma must be finite and > 0");
  }
  const double sum = detail::tail_log_sum(s, sigma);
  if (!(sum > 0.0)) {
    throw DataError("mle_theta_given_sigma: degenerate sample (every value equals the threshold " +
                    std::to_string(s.x0()) + ")");
  }
  return static_cast<double>(s.size()) / sum;
}

/// Solves the sigma estimating equation with theta held fixed.
inline double mle_sigma_given_theta(const Sample& s, double theta, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (!std::isfinite(theta) || !(theta > 0.0)) {
    throw InvalidParameter("mle_sigma_given_theta: theta must be finite and > 0");
  }
  const auto v = s.values();
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    throw DataError("mle_sigma_given_theta: every value is zero");
  }
  auto value = [&](double sigma) { return censored_log_likelihood(s, ThetaSigma(theta, sigma)); };
  auto slope = [&](double sigma) { return detail::sigma_score(s, theta, sigma); };
  const auto opt = detail::maximize_over_scale(value, slope, detail::scale_search_options(s, cfg));
  if (opt.bound != detail::SearchBound::interior) {
    throw ConvergenceError(std::string("mle_sigma_given_theta: no stationary point, optimum at ") +
                           std::string(to_string(detail::to_boundary_flag(opt.bound))));
  }
  const double residual = sigma_equation_residual(s, ThetaSigma(theta, opt.sigma));
  if (!(residual < cfg.rel_tol)) {
    throw ConvergenceError("mle_sigma_given_theta: residual " + std::to_string(residual) +
                           " above tolerance");
  }
  return opt.sigma;
}

/// Joint MLE for left-censored data (x0 = 0 gives the uncensored MLE).
/// Profiles theta out in closed form and searches log(sigma); the interior
/// optimum is certified by the sigma estimating-equation residual.
inline FitResult mle_joint_censored(const Sample& s, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (s.size() < 2) throw DataError("at least two observations are required for a joint fit");
  if (detail::all_equal(s.values())) {
    throw DataError("degenerate sample: all values are equal");
  }

  const double n = static_cast<double>(s.size());
  const double x0 = s.x0();
  auto theta_at = [&](double sigma) { return n / detail::tail_log_sum(s, sigma); };
  // Profile log-likelihood: n log n - n - n log(sigma + x0) - n log L - L.
  auto value = [&](double sigma) {
    const double l = detail::tail_log_sum(s, sigma);
    return n * std::log(n) - n - n * std::log(sigma + x0) - n * std::log(l) - l;
  };
  auto slope = [&](double sigma) { return detail::sigma_score(s, theta_at(sigma), sigma); };

  const auto opt = detail::maximize_over_scale(value, slope, detail::scale_search_options(s, cfg));
  const ThetaSigma params(theta_at(opt.sigma), opt.sigma);
  const double residual = sigma_equation_residual(s, params);
  const auto flag = detail::to_boundary_flag(opt.bound);
  return FitResult{
      .params = params,
      .params_qk = to_q_kappa(params),
      .loglik = censored_log_likelihood(s, params),
      .converged = flag == BoundaryFlag::interior && residual < cfg.rel_tol,
      .iterations = opt.evaluations,
      .residual = residual,
      .boundary_flag = flag,
  };
}

/// Joint MLE for uncensored data.
inline FitResult mle_joint(const Sample& s, const SolverConfig& cfg = {}) {
  if (s.censored()) {
    throw DataError("mle_joint: sample is censored at x0 = " + std::to_string(s.x0()) +
                    "; use mle_joint_censored");
  }
  return mle_joint_censored(s, cfg);
}

}  // namespace qexp

#endif  // QEXP_ESTIMATION_HPP
