#ifndef QEXP_MC_HARNESS_HPP
#define QEXP_MC_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qexp/curvefit.hpp"
#include "qexp/distribution.hpp"
#include "qexp/errors.hpp"
#include "qexp/estimation.hpp"
#include "qexp/parallel.hpp"
#include "qexp/quantile.hpp"
#include "qexp/rng.hpp"

namespace qexp {

enum class Method { mle, curvefit };

inline std::string_view to_string(Method m) { return m == Method::mle ? "mle" : "curvefit"; }

struct ExperimentPlan {
  ThetaSigma truth{3.0, 200.0};
  std::vector<std::size_t> sizes{10, 100, 1000, 10000};
  std::size_t reps = 500;
  std::vector<Method> methods{Method::mle, Method::curvefit};
  RngStream seed{};
  SolverConfig solver{};
  std::size_t workers = 1;  // 0 = hardware concurrency

  void validate() const {
    if (reps < 1) throw InvalidParameter("experiment: reps must be >= 1");
    if (sizes.empty()) throw InvalidParameter("experiment: no sample sizes");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] < 1) throw InvalidParameter("experiment: sample sizes must be >= 1");
      if (i > 0 && !(sizes[i] > sizes[i - 1])) {
        throw InvalidParameter("experiment: sample sizes must be strictly increasing");
      }
    }
    if (methods.empty()) throw InvalidParameter("experiment: no methods");
    solver.validate();
  }
};

struct ReplicateRow {
  std::size_t n = 0;
  std::size_t rep = 0;
  Method method = Method::mle;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double q = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

/// Quantiles, extrema and failure count of q-hat for one (n, method) group.
struct GroupSummary {
  std::size_t n = 0;
  Method method = Method::mle;
  std::vector<double> probs;
  std::vector<double> quantiles;  // aligned with probs
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  std::size_t failures = 0;

  double at(double prob) const {
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] == prob) return quantiles[i];
    }
    throw MissingGroup("quantile level " + std::to_string(prob) + " was not summarized");
  }
  double median() const { return at(0.5); }
  double p05() const { return at(0.05); }
  double p95() const { return at(0.95); }
};

struct ExperimentSummary {
  std::vector<double> probs;
  std::vector<GroupSummary> groups;  // ordered by n, then method
  std::vector<ReplicateRow> raw;     // ordered by n, rep, method

  const GroupSummary& group(std::size_t n, Method m) const {
    for (const auto& g : groups) {
      if (g.n == n && g.method == m) return g;
    }
    throw MissingGroup("no summary for n = " + std::to_string(n) + ", method " +
                       std::string(to_string(m)));
  }
};

inline const std::vector<double>& default_summary_probs() {
  static const std::vector<double> p{0.05, 0.5, 0.95};
  return p;
}

/// Groups rows by (n, method) and summarizes q-hat over converged rows with the
/// same midpoint-interpolated quantiles as percentile_ci.
inline ExperimentSummary summarize(std::vector<ReplicateRow> raw,
                                   const std::vector<double>& probs = default_summary_probs()) {
  if (raw.empty()) throw MissingGroup("summarize: empty replicate table");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("summarize: probabilities must lie in [0, 1]");
  }
  std::map<std::pair<std::size_t, int>, std::vector<const ReplicateRow*>> by_group;
  for (const auto& r : raw) by_group[{r.n, static_cast<int>(r.method)}].push_back(&r);

  ExperimentSummary out;
  out.probs = probs;
  for (const auto& [key, rows] : by_group) {
    GroupSummary g;
    g.n = key.first;
    g.method = static_cast<Method>(key.second);
    g.probs = probs;
    std::vector<double> q;
    for (const auto* r : rows) {
      if (r->converged) {
        q.push_back(r->q);
      } else {
        ++g.failures;
      }
    }
    g.used = q.size();
    if (q.empty()) {
      g.quantiles.assign(probs.size(), std::numeric_limits<double>::quiet_NaN());
    } else {
      std::sort(q.begin(), q.end());
      for (double p : probs) g.quantiles.push_back(midpoint_quantile_sorted(q, p));
      g.min = q.front();
      g.max = q.back();
      g.sd = sample_sd(q);
    }
    out.groups.push_back(std::move(g));
  }
  out.raw = std::move(raw);
  return out;
}

namespace detail {

inline ReplicateRow fit_row(const Sample& data, std::size_t n, std::size_t rep, Method m,
                            const SolverConfig& solver) {
  ReplicateRow row;
  row.n = n;
  row.rep = rep;
  row.method = m;
  try {
    if (m == Method::mle) {
      const FitResult f = mle_joint(data, solver);
      row.converged = f.converged;
      row.theta = f.params.theta();
      row.sigma = f.params.sigma();
      row.q = f.params_qk.q();
      row.kappa = f.params_qk.kappa();
    } else {
      const CurveFitResult f = curvefit(data, solver);
      const QKappa qk = f.params_qk();
      row.converged = f.converged;
      row.theta = f.params.theta();
      row.sigma = f.params.sigma();
      row.q = qk.q();
      row.kappa = qk.kappa();
    }
  } catch (const Error&) {
    row.converged = false;
  }
  return row;
}

}  // namespace detail

/// One fresh sample per (size, rep) from the truth, fitted by each method.
/// Sample (n, rep) uses seed.substream(n).substream(rep), so estimates do not
/// depend on worker count or on which other sizes are in the plan.
inline ExperimentSummary run_experiment(const ExperimentPlan& plan,
                                        const std::vector<double>& probs = default_summary_probs()) {
  plan.validate();
  const std::size_t tasks = plan.sizes.size() * plan.reps;
  const std::size_t m = plan.methods.size();
  std::vector<ReplicateRow> rows(tasks * m);
  parallel_for(tasks, plan.workers, [&](std::size_t t) {
    const std::size_t n = plan.sizes[t / plan.reps];
    const std::size_t rep = t % plan.reps;
    const Sample data = sample(plan.truth, n, plan.seed.substream(n).substream(rep));
    for (std::size_t k = 0; k < m; ++k) {
      rows[t * m + k] = detail::fit_row(data, n, rep, plan.methods[k], plan.solver);
    }
  });
  return summarize(std::move(rows), probs);
}

}  // namespace qexp

#endif  // QEXP_MC_HARNESS_HPP
