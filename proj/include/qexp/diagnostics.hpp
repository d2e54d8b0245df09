#ifndef QEXP_DIAGNOSTICS_HPP
#define QEXP_DIAGNOSTICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "qexp/distribution.hpp"
#include "qexp/errors.hpp"
#include "qexp/estimation.hpp"
#include "qexp/inference.hpp"
#include "qexp/parallel.hpp"
#include "qexp/resampling.hpp"
#include "qexp/sample.hpp"

namespace qexp {

/// Two-sided KS distance between sorted data and a continuous CDF.
template <class Cdf>
double ks_distance_sorted(std::span<const double> sorted, Cdf&& cdf_fn) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf_fn(sorted[i]);
    const double upper = static_cast<double>(i + 1) / n - f;
    const double lower = f - static_cast<double>(i) / n;
    d = std::max({d, upper, lower});
  }
  return d;
}

/// KS distance of the sample from the fitted law; censored samples are
/// compared with the conditional law above x0.
inline double ks_statistic(const Sample& s, const ThetaSigma& p) {
  std::vector<double> v(s.values().begin(), s.values().end());
  std::sort(v.begin(), v.end());
  const double x0 = s.x0();
  return ks_distance_sorted(v, [&](double x) { return tail_cdf(p, x0, x); });
}

struct GofReport {
  double ks_statistic = 0.0;
  double p_value = 1.0;  // (1 + #{D_b >= D}) / (B_used + 1)
  std::size_t B_requested = 0;
  std::size_t B_used = 0;
};

namespace detail {

// A boundary fit is still the maximizer over the searched scale range, so KS
// against it is well defined. Only interior fits that missed the tolerance are
// unusable.
inline bool usable_for_gof(const FitResult& f) noexcept { return f.converged || !f.interior(); }

}  // namespace detail

/// Parametric-bootstrap calibrated KS test. Every replicate is refitted before
/// its distance is taken, so the reference distribution accounts for the
/// parameters having been estimated.
inline GofReport gof_bootstrap(const Sample& s, const FitResult& fit, const BootstrapConfig& cfg) {
  cfg.validate();
  if (!detail::usable_for_gof(fit)) throw ConvergenceError("gof_bootstrap: fit did not converge");
  const double d_obs = ks_statistic(s, fit.params);

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> d_rep(cfg.B, nan);
  parallel_for(cfg.B, cfg.workers, [&](std::size_t b) {
    try {
      const Sample rep = sample_tail(fit.params, s.x0(), s.size(), cfg.seed.substream(b));
      const FitResult r = mle_joint_censored(rep, cfg.solver);
      if (detail::usable_for_gof(r)) d_rep[b] = ks_statistic(rep, r.params);
    } catch (const Error&) {
    }
  });

  GofReport out;
  out.ks_statistic = d_obs;
  out.B_requested = cfg.B;
  std::size_t exceed = 0;
  for (double d : d_rep) {
    if (std::isnan(d)) continue;
    ++out.B_used;
    if (d >= d_obs) ++exceed;
  }
  const std::size_t failures = cfg.B - out.B_used;
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(out.B_used + 1);
  if (failures * 10 > cfg.B) {
    throw ConvergenceError("gof_bootstrap: " + std::to_string(failures) + " of " +
                           std::to_string(cfg.B) + " replicates failed (limit 10%)");
  }
  return out;
}

inline constexpr double kInfoDiscrepancyFlag = 0.25;
inline constexpr double kSeRatioLow = 0.7;
inline constexpr double kSeRatioHigh = 1.4;

/// ||A - B||_F / ||A||_F.
inline double relative_frobenius(const Sym2& a, const Sym2& b) {
  const double denom = a.frobenius();
  if (!(denom > 0.0)) throw IllConditioned("relative distance to a zero matrix");
  return (a - b).frobenius() / denom;
}

/// Information re-expressed in (theta, log sigma); all entries are then
/// dimensionless, so matrix norms no longer depend on data units.
inline Sym2 log_scale_coords(const Sym2& m, double sigma) noexcept {
  return {m.xx, m.xy * sigma, m.yy * sigma * sigma};
}

/// Relative Frobenius distance between expected and observed information in
/// (theta, log sigma) coordinates.
inline double info_discrepancy(const Sym2& expected, const Sym2& observed, double sigma) {
  return relative_frobenius(log_scale_coords(expected, sigma), log_scale_coords(observed, sigma));
}

struct SpecReport {
  double info_discrepancy = 0.0;  // ||I - J||_F / ||I||_F at the fit, (theta, log sigma)
  InfoMatrix expected;
  InfoMatrix observed;
  std::array<double, 4> se_ratio{};  // parametric / nonparametric bootstrap SE
  BootstrapSummary parametric;
  BootstrapSummary nonparametric;
  std::vector<std::string> notes;  // heuristic flags
};

/// Two heuristic mis-specification checks: expected vs observed information
/// at the fit, and parametric vs nonparametric bootstrap standard errors.
inline SpecReport spec_report(const Sample& s, const FitResult& fit, const BootstrapConfig& cfg) {
  cfg.validate();
  if (!fit.converged) throw ConvergenceError("spec_report: fit did not converge");

  SpecReport r;
  r.expected = fisher_information_censored(fit.params, s.x0());
  r.observed = observed_information(s, fit.params);
  r.info_discrepancy = info_discrepancy(r.expected.entries, r.observed.entries, fit.params.sigma());

  BootstrapConfig pc = cfg;
  pc.mode = BootstrapMode::parametric;
  BootstrapConfig nc = cfg;
  nc.mode = BootstrapMode::nonparametric;
  r.parametric = bootstrap(s, fit, pc);
  r.nonparametric = bootstrap(s, fit, nc);

  char buf[160];
  if (r.info_discrepancy > kInfoDiscrepancyFlag) {
    std::snprintf(buf, sizeof buf,
                  "heuristic: expected and observed information differ by %.3g (relative "
                  "Frobenius) > %.2g",
                  r.info_discrepancy, kInfoDiscrepancyFlag);
    r.notes.emplace_back(buf);
  }
  for (std::size_t j = 0; j < 4; ++j) {
    const double np = r.nonparametric.params[j].se;
    r.se_ratio[j] = np > 0.0 ? r.parametric.params[j].se / np
                             : std::numeric_limits<double>::quiet_NaN();
    if (!(r.se_ratio[j] >= kSeRatioLow && r.se_ratio[j] <= kSeRatioHigh)) {
      std::snprintf(buf, sizeof buf,
                    "heuristic: parametric/nonparametric bootstrap SE ratio for %s is %.3g, "
                    "outside [%.2g, %.2g]",
                    std::string(kParamNames[j]).c_str(), r.se_ratio[j], kSeRatioLow, kSeRatioHigh);
      r.notes.emplace_back(buf);
    }
  }
  return r;
}

}  // namespace qexp

#endif  // QEXP_DIAGNOSTICS_HPP
