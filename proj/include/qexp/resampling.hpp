#ifndef QEXP_RESAMPLING_HPP
#define QEXP_RESAMPLING_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/distribution.hpp"
#include "qexp/errors.hpp"
#include "qexp/estimation.hpp"
#include "qexp/inference.hpp"
#include "qexp/parallel.hpp"
#include "qexp/quantile.hpp"
#include "qexp/rng.hpp"
#include "qexp/sample.hpp"

namespace qexp {

inline constexpr std::size_t kMinReplicatesForCi = 100;

/// Percentile interval: the (1-level)/2 and (1+level)/2 midpoint-interpolated
/// quantiles of the replicates.
inline Interval percentile_ci(std::vector<double> replicates, double level) {
  if (replicates.size() < kMinReplicatesForCi) {
    throw InsufficientReplicates("percentile_ci: need at least " +
                                 std::to_string(kMinReplicatesForCi) + " replicates, got " +
                                 std::to_string(replicates.size()));
  }
  if (!(level >= 0.0 && level < 1.0)) throw DomainError("percentile_ci: level must lie in [0, 1)");
  std::sort(replicates.begin(), replicates.end());
  return {midpoint_quantile_sorted(replicates, 0.5 * (1.0 - level)),
          midpoint_quantile_sorted(replicates, 0.5 * (1.0 + level))};
}

enum class BootstrapMode { parametric, nonparametric };

inline std::string_view to_string(BootstrapMode m) {
  return m == BootstrapMode::parametric ? "parametric" : "nonparametric";
}

struct BootstrapConfig {
  std::size_t B = 1000;
  double level = 0.90;
  BootstrapMode mode = BootstrapMode::parametric;
  RngStream seed{};
  SolverConfig solver{};
  std::size_t workers = 1;  // 0 = hardware concurrency

  void validate() const {
    if (B < 1) throw InvalidParameter("bootstrap: B must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw InvalidParameter("bootstrap: level must lie in (0, 1)");
    solver.validate();
  }
};

// Column order of replicate tables.
enum ParamIndex : std::size_t { kTheta = 0, kSigma = 1, kQ = 2, kKappa = 3 };
inline constexpr std::array<std::string_view, 4> kParamNames{"theta", "sigma", "q", "kappa"};

struct ParamSummary {
  double estimate = 0.0;  // from the original fit
  double bias = 0.0;      // mean(replicates) - estimate
  double se = 0.0;        // sd(replicates)
  bool has_ci = false;    // needs >= 100 usable replicates
  Interval ci;
};

struct BootstrapSummary {
  BootstrapMode mode = BootstrapMode::parametric;
  std::size_t B = 0;
  double level = 0.9;
  std::size_t failures = 0;
  std::array<ParamSummary, 4> params;
  // One row per replicate (theta, sigma, q, kappa); NaN rows where the refit failed.
  std::vector<std::array<double, 4>> replicate_estimates;
  std::vector<bool> usable;

  std::size_t used() const noexcept { return B - failures; }
  const ParamSummary& operator[](ParamIndex i) const { return params[i]; }
};

/// Thrown when more than 10% of replicates fail; carries what was computed.
class BootstrapUnstable : public Error {
 public:
  BootstrapUnstable(const std::string& what, BootstrapSummary partial)
      : Error(what), partial_(std::move(partial)) {}
  const BootstrapSummary& partial() const noexcept { return partial_; }

 private:
  BootstrapSummary partial_;
};

namespace detail {

inline Sample resample_with_replacement(const Sample& s, const RngStream& rng) {
  auto eng = rng.engine();
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  std::vector<double> out(s.size());
  for (auto& x : out) x = s[pick(eng)];
  return Sample(std::move(out), s.x0());
}

// Draws replicate b for the given mode: parametric replicates come from the
// fitted law restricted to the tail above the sample's x0.
inline Sample bootstrap_replicate(const Sample& s, const ThetaSigma& fitted, BootstrapMode mode,
                                  const RngStream& seed, std::size_t b) {
  const RngStream stream = seed.substream(b);
  if (mode == BootstrapMode::parametric) return sample_tail(fitted, s.x0(), s.size(), stream);
  return resample_with_replacement(s, stream);
}

inline void check_failure_rate(std::size_t failures, std::size_t total, const char* what,
                               const BootstrapSummary& partial) {
  if (failures * 10 > total) {
    throw BootstrapUnstable(std::string(what) + ": " + std::to_string(failures) + " of " +
                                std::to_string(total) + " replicates failed (limit 10%)",
                            partial);
  }
}

}  // namespace detail

/// Bootstrap distribution of the joint MLE. Each replicate b uses substream b
/// of cfg.seed, so results are identical for any worker count.
inline BootstrapSummary bootstrap(const Sample& s, const FitResult& fit, const BootstrapConfig& cfg) {
  cfg.validate();
  if (!fit.converged) throw ConvergenceError("bootstrap: fit did not converge");

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::array<double, 4>> rows(cfg.B, {nan, nan, nan, nan});
  std::vector<char> ok(cfg.B, 0);

  parallel_for(cfg.B, cfg.workers, [&](std::size_t b) {
    try {
      const Sample rep = detail::bootstrap_replicate(s, fit.params, cfg.mode, cfg.seed, b);
      const FitResult r = mle_joint_censored(rep, cfg.solver);
      if (!r.converged) return;
      rows[b] = {r.params.theta(), r.params.sigma(), r.params_qk.q(), r.params_qk.kappa()};
      ok[b] = 1;
    } catch (const Error&) {
      // counted as a failure below
    }
  });

  BootstrapSummary out;
  out.mode = cfg.mode;
  out.B = cfg.B;
  out.level = cfg.level;
  out.replicate_estimates = std::move(rows);
  out.usable.assign(ok.begin(), ok.end());
  const std::array<double, 4> est{fit.params.theta(), fit.params.sigma(), fit.params_qk.q(),
                                  fit.params_qk.kappa()};
  for (std::size_t b = 0; b < cfg.B; ++b) out.failures += ok[b] ? 0 : 1;

  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> col;
    col.reserve(out.used());
    for (std::size_t b = 0; b < cfg.B; ++b) {
      if (ok[b]) col.push_back(out.replicate_estimates[b][j]);
    }
    auto& p = out.params[j];
    p.estimate = est[j];
    p.bias = col.empty() ? nan : sample_mean(col) - est[j];
    p.se = col.size() < 2 ? nan : sample_sd(col);
    if (col.size() >= kMinReplicatesForCi) {
      p.ci = percentile_ci(std::move(col), cfg.level);
      p.has_ci = true;
    }
  }
  detail::check_failure_rate(out.failures, cfg.B, "bootstrap", out);
  return out;
}

}  // namespace qexp

#endif  // QEXP_RESAMPLING_HPP
