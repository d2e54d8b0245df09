#ifndef QEXP_CURVEFIT_HPP
#define QEXP_CURVEFIT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qexp/detail/profile_search.hpp"
#include "qexp/errors.hpp"
#include "qexp/estimation.hpp"
#include "qexp/params.hpp"
#include "qexp/sample.hpp"

namespace qexp {

/// S_n(x) = #{j : x_j >= x} / n at each distinct observed value, ascending.
struct EmpiricalSurvival {
  struct Point {
    double x;
    double s;                 // in [1/n, 1]
    std::size_t multiplicity; // number of observations equal to x
  };
  std::vector<Point> points;
  std::size_t n = 0;
};

inline EmpiricalSurvival empirical_survival(const Sample& s) {
  std::vector<double> v(s.values().begin(), s.values().end());
  std::sort(v.begin(), v.end());
  EmpiricalSurvival out;
  out.n = v.size();
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    out.points.push_back({v[i], static_cast<double>(v.size() - i) / n, j - i});
    i = j;
  }
  return out;
}

struct CurveFitResult {
  ThetaSigma params;
  double sse = 0.0;        // sum over observations of (log S_n(x_i) + theta log(1 + x_i/sigma))^2
  double r_squared = 0.0;  // 1 - sse / SS_tot of log S_n
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;  // |sigma dF/dsigma| / n at the reported point
  BoundaryFlag boundary_flag = BoundaryFlag::interior;

  QKappa params_qk() const { return to_q_kappa(params); }
};

namespace detail {

// Observation-level regression data: y_i = log S_n(x_i) (ties share a value
// and are each counted), with the x_i alongside.
struct LogSurvivalData {
  std::vector<double> x;
  std::vector<double> y;
};

inline LogSurvivalData log_survival_data(const Sample& s) {
  if (s.censored()) throw DataError("curve fitting supports uncensored samples only");
  const auto es = empirical_survival(s);
  LogSurvivalData d;
  d.x.reserve(es.n);
  d.y.reserve(es.n);
  for (const auto& p : es.points) {
    const double ly = std::log(p.s);
    for (std::size_t k = 0; k < p.multiplicity; ++k) {
      d.x.push_back(p.x);
      d.y.push_back(ly);
    }
  }
  return d;
}

// For fixed sigma the objective is linear least squares through the origin in
// theta: theta(sigma) = -sum y b / sum b^2 with b = log(1 + x/sigma).
struct CurveProfile {
  double theta;
  double sse;
  double slope;  // -(sigma dF/dsigma) at theta(sigma); derivative of -F in log sigma
};

inline CurveProfile curve_profile(const LogSurvivalData& d, double sigma) {
  double syb = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double b = std::log1p(d.x[i] / sigma);
    syb += d.y[i] * b;
    sbb += b * b;
  }
  const double theta = sbb > 0.0 ? -syb / sbb : 0.0;
  double sse = 0.0;
  double grad = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double b = std::log1p(d.x[i] / sigma);
    const double r = d.y[i] + theta * b;
    sse += r * r;
    grad += r * d.x[i] / (sigma + d.x[i]);
  }
  return {theta, sse, 2.0 * theta * grad};
}

inline double sum_sq_dev(const std::vector<double>& y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return ss;
}

}  // namespace detail

/// R^2 of log S_n explained by the curve -theta log(1 + x/sigma).
inline double r_squared(const Sample& s, const ThetaSigma& p) {
  const auto d = detail::log_survival_data(s);
  const double ss_tot = detail::sum_sq_dev(d.y);
  if (!(ss_tot > 0.0)) throw DataError("R^2 is undefined: log S_n has zero variance");
  double ss_res = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double r = d.y[i] + p.theta() * std::log1p(d.x[i] / p.sigma());
    ss_res += r * r;
  }
  return 1.0 - ss_res / ss_tot;
}

/// Least-squares fit of log S_n(x_i) ~ -theta log(1 + x_i/sigma).
inline CurveFitResult curvefit(const Sample& s, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (detail::all_equal(s.values())) throw DataError("curvefit: degenerate sample, all values equal");
  const auto d = detail::log_survival_data(s);
  const double n = static_cast<double>(d.x.size());

  auto value = [&](double sigma) { return -detail::curve_profile(d, sigma).sse; };
  auto slope = [&](double sigma) { return detail::curve_profile(d, sigma).slope; };
  const auto opt = detail::maximize_over_scale(value, slope, detail::scale_search_options(s, cfg));

  const auto prof = detail::curve_profile(d, opt.sigma);
  if (!(prof.theta > 0.0)) throw ConvergenceError("curvefit: non-positive shape at the optimum");
  const ThetaSigma params(prof.theta, opt.sigma);
  const double ss_tot = detail::sum_sq_dev(d.y);
  const auto flag = detail::to_boundary_flag(opt.bound);
  const double residual = std::abs(prof.slope) / n;
  return CurveFitResult{
      .params = params,
      .sse = prof.sse,
      .r_squared = ss_tot > 0.0 ? 1.0 - prof.sse / ss_tot : 1.0,
      .converged = flag == BoundaryFlag::interior && residual < cfg.rel_tol,
      .iterations = opt.evaluations,
      .residual = residual,
      .boundary_flag = flag,
  };
}

}  // namespace qexp

#endif  // QEXP_CURVEFIT_HPP
