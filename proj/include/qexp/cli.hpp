#ifndef QEXP_CLI_HPP
#define QEXP_CLI_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qexp/curvefit.hpp"
#include "qexp/diagnostics.hpp"
#include "qexp/distribution.hpp"
#include "qexp/errors.hpp"
#include "qexp/estimation.hpp"
#include "qexp/inference.hpp"
#include "qexp/io.hpp"
#include "qexp/mc_harness.hpp"
#include "qexp/resampling.hpp"

namespace qexp::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kDataError = 1, kUsage = 2, kNonConvergence = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Report serialization

inline Json interval_json(const Interval& i) { return Json::array({i.low, i.high}); }

inline Json fit_fields(const FitResult& f) {
  Json j;
  j["theta"] = f.params.theta();
  j["sigma"] = f.params.sigma();
  j["q"] = f.params_qk.q();
  j["kappa"] = f.params_qk.kappa();
  j["loglik"] = f.loglik;
  j["converged"] = f.converged;
  j["boundary_flag"] = std::string(to_string(f.boundary_flag));
  j["iterations"] = f.iterations;
  j["residual"] = f.residual;
  return j;
}

inline Json covariance_json(const CovarianceReport& c) {
  Json se;
  se["theta"] = c.se_theta;
  se["sigma"] = c.se_sigma;
  se["q"] = c.se_q;
  se["kappa"] = c.se_kappa;
  Json ci;
  ci["level"] = c.ci_level;
  ci["theta"] = interval_json(c.ci_theta);
  ci["sigma"] = interval_json(c.ci_sigma);
  ci["q"] = interval_json(c.ci_q);
  ci["kappa"] = interval_json(c.ci_kappa);
  Json j;
  j["se"] = se;
  j["ci"] = ci;
  j["cov_theta_sigma"] = Json::array({c.cov.xx, c.cov.xy, c.cov.yy});
  j["cov_q_kappa"] = Json::array({c.cov_qk.xx, c.cov_qk.xy, c.cov_qk.yy});
  return j;
}

inline Json bootstrap_json(const BootstrapSummary& b) {
  Json j;
  j["mode"] = std::string(to_string(b.mode));
  j["B"] = b.B;
  j["used"] = b.used();
  j["failures"] = b.failures;
  j["level"] = b.level;
  Json params;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& p = b.params[k];
    Json e;
    e["estimate"] = p.estimate;
    e["bias"] = p.bias;
    e["se"] = p.se;
    e["ci"] = p.has_ci ? interval_json(p.ci) : Json(nullptr);
    params[std::string(kParamNames[k])] = e;
  }
  j["params"] = params;
  return j;
}

inline Json gof_json(const GofReport& g) {
  Json j;
  j["test"] = "kolmogorov_smirnov_parametric_bootstrap";
  j["ks_statistic"] = g.ks_statistic;
  j["p_value"] = g.p_value;
  j["B_requested"] = g.B_requested;
  j["B_used"] = g.B_used;
  return j;
}

inline Json spec_json(const SpecReport& r) {
  Json j;
  j["info_discrepancy"] = r.info_discrepancy;
  j["expected_information"] = Json::array({r.expected.entries.xx, r.expected.entries.xy, r.expected.entries.yy});
  j["observed_information"] = Json::array({r.observed.entries.xx, r.observed.entries.xy, r.observed.entries.yy});
  Json ratio;
  for (std::size_t k = 0; k < 4; ++k) ratio[std::string(kParamNames[k])] = r.se_ratio[k];
  j["se_ratio_parametric_over_nonparametric"] = ratio;
  j["thresholds"] = {{"info_discrepancy", kInfoDiscrepancyFlag},
                     {"se_ratio_low", kSeRatioLow},
                     {"se_ratio_high", kSeRatioHigh},
                     {"note", "heuristic thresholds, not significance levels"}};
  j["flags"] = r.notes;
  return j;
}

namespace detail {

inline void flatten(const Json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
    return;
  }
  out << prefix << ": ";
  if (j.is_array()) {
    out << "[";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out << ", ";
      const auto& e = j[i];
      if (e.is_number_float()) {
        out << format_double(e.get<double>());
      } else if (e.is_string()) {
        out << e.get<std::string>();
      } else {
        out << e.dump();
      }
    }
    out << "]\n";
  } else if (j.is_number_float()) {
    out << format_double(j.get<double>()) << "\n";
  } else if (j.is_string()) {
    out << j.get<std::string>() << "\n";
  } else {
    out << j.dump() << "\n";
  }
}

}  // namespace detail

/// Writes a report as pretty JSON or as flattened "key: value" lines.
inline void emit(const Json& report, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << report.dump(2) << "\n";
  } else {
    detail::flatten(report, "", out);
  }
}

// ---------------------------------------------------------------------------
// Commands

struct FitOptions {
  std::string input;
  double censor = 0.0;
  std::optional<double> fix_theta;
  std::optional<double> fix_sigma;
  std::size_t boot = 0;
  std::string boot_mode = "parametric";
  double ci = 0.90;
  bool gof = false;
  std::size_t gof_boot = 1000;
  std::uint64_t seed = 0;
  std::string info = "expected";
  std::string format = "json";
  std::size_t workers = 0;
};

namespace detail {

inline BootstrapMode parse_boot_mode(const std::string& s) {
  if (s == "parametric") return BootstrapMode::parametric;
  if (s == "nonparametric") return BootstrapMode::nonparametric;
  throw UsageError("--boot-mode must be 'parametric' or 'nonparametric'");
}

inline Json header(std::string_view command, const std::string& source, const Sample& s,
                   std::uint64_t seed) {
  Json j;
  j["tool"] = "qexp";
  j["version"] = std::string(kVersion);
  j["command"] = std::string(command);
  j["source"] = source;
  j["seed"] = seed;
  j["n"] = s.size();
  j["x0"] = s.x0();
  return j;
}

inline void merge(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

}  // namespace detail

inline int cmd_fit(const FitOptions& o, std::ostream& out) {
  if (o.fix_theta && o.fix_sigma) throw UsageError("--fix-theta and --fix-sigma are exclusive");
  if ((o.fix_theta || o.fix_sigma) && (o.boot > 0 || o.gof)) {
    throw UsageError("--boot and --gof refit both parameters and cannot be combined with --fix-*");
  }
  if (o.boot > 0 && o.boot < kMinReplicatesForCi) {
    throw UsageError("--boot must be 0 or at least " + std::to_string(kMinReplicatesForCi));
  }
  if (o.format != "json" && o.format != "text") throw UsageError("--format must be json or text");
  if (o.info != "expected" && o.info != "observed") {
    throw UsageError("--info must be expected or observed");
  }
  if (!(o.ci > 0.0 && o.ci < 1.0)) throw UsageError("--ci must lie in (0, 1)");
  const BootstrapMode mode = detail::parse_boot_mode(o.boot_mode);
  const InfoKind kind = o.info == "expected" ? InfoKind::expected : InfoKind::observed;

  const Sample s = ingest(o.input, o.censor);
  const SolverConfig solver;

  FixedParam fixed = FixedParam::none;
  std::optional<FitResult> fit;
  if (o.fix_sigma) {
    fixed = FixedParam::sigma;
    const ThetaSigma p(mle_theta_given_sigma(s, *o.fix_sigma), *o.fix_sigma);
    fit = FitResult{p, to_q_kappa(p), censored_log_likelihood(s, p), true, 0, 0.0,
                    BoundaryFlag::interior};
  } else if (o.fix_theta) {
    fixed = FixedParam::theta;
    const ThetaSigma p(*o.fix_theta, mle_sigma_given_theta(s, *o.fix_theta, solver));
    fit = FitResult{p, to_q_kappa(p), censored_log_likelihood(s, p), true, 0,
                    sigma_equation_residual(s, p), BoundaryFlag::interior};
  } else {
    fit = mle_joint_censored(s, solver);
  }

  Json report = detail::header("fit", o.input, s, o.seed);
  detail::merge(report, fit_fields(*fit));
  report["fixed"] = fixed == FixedParam::none ? Json(nullptr)
                                              : Json(fixed == FixedParam::theta ? "theta" : "sigma");
  report["info"] = o.info;

  int code = kOk;
  std::vector<std::string> errors;
  if (fit->converged && fit->interior()) {
    try {
      const auto cov = covariance_report(s, *fit, kind, o.ci, fixed);
      detail::merge(report, covariance_json(cov));
    } catch (const IllConditioned& e) {
      errors.emplace_back(e.what());
      report["se"] = nullptr;
      report["ci"] = nullptr;
      code = kNonConvergence;
    }
  } else {
    report["se"] = nullptr;
    report["ci"] = nullptr;
    errors.emplace_back(std::string("fit did not converge to an interior optimum (") +
                        std::string(to_string(fit->boundary_flag)) + ")");
    code = kNonConvergence;
  }

  BootstrapConfig bc;
  bc.level = o.ci;
  bc.mode = mode;
  bc.seed = RngStream{o.seed, 0};
  bc.workers = o.workers;

  report["bootstrap"] = nullptr;
  if (o.boot > 0 && code == kOk) {
    bc.B = o.boot;
    try {
      report["bootstrap"] = bootstrap_json(bootstrap(s, *fit, bc));
    } catch (const BootstrapUnstable& e) {
      report["bootstrap"] = bootstrap_json(e.partial());
      errors.emplace_back(e.what());
      code = kNonConvergence;
    }
  }
  report["gof"] = nullptr;
  if (o.gof && qexp::detail::usable_for_gof(*fit)) {
    bc.B = o.boot > 0 ? o.boot : o.gof_boot;
    bc.seed = RngStream{o.seed, 1};
    try {
      report["gof"] = gof_json(gof_bootstrap(s, *fit, bc));
    } catch (const ConvergenceError& e) {
      errors.emplace_back(e.what());
      code = kNonConvergence;
    }
  }
  report["errors"] = errors;
  emit(report, o.format, out);
  return code;
}

struct SampleOptions {
  std::optional<std::string> theta, sigma, q, kappa;
  std::size_t n = 0;
  double censor = 0.0;
  std::uint64_t seed = 0;
};

/// Resolves the parameter flags. Ratios such as "4/3" are converted without
/// first rounding q, so --q 4/3 gives theta = 3 exactly.
inline ThetaSigma resolve_params(const SampleOptions& o) {
  const bool ts = o.theta || o.sigma;
  const bool qk = o.q || o.kappa;
  if (ts == qk) throw UsageError("give exactly one of --theta/--sigma or --q/--kappa");
  auto need = [](const std::optional<std::string>& v, const char* name) {
    if (!v) throw UsageError(std::string("missing ") + name);
    const auto r = parse_rational(*v);
    if (!r) throw UsageError(std::string("cannot parse ") + name + " value '" + *v + "'");
    return *r;
  };
  if (ts) return ThetaSigma(need(o.theta, "--theta").value(), need(o.sigma, "--sigma").value());
  const Rational q = need(o.q, "--q");
  const Rational kappa = need(o.kappa, "--kappa");
  // theta = 1/(q - 1) = den/(num - den)
  const double theta = q.den / (q.num - q.den);
  if (!(q.value() > 1.0)) {
    throw UnsupportedBranch("q <= 1 (bounded support) is not supported");
  }
  const QKappa checked(q.value(), kappa.value());
  (void)checked;
  return ThetaSigma(theta, theta * kappa.value());
}

inline int cmd_sample(const SampleOptions& o, std::ostream& out) {
  const ThetaSigma p = [&] {
    try {
      return resolve_params(o);
    } catch (const InvalidParameter& e) {
      throw UsageError(e.what());  // bad flag values, not bad data
    }
  }();
  if (o.n < 1) throw UsageError("-n must be >= 1");
  const RngStream rng{o.seed, 0};
  const Sample s = sample_tail(p, o.censor, o.n, rng);
  for (double x : s.values()) out << format_double(x) << "\n";
  return kOk;
}

struct ExperimentOptions {
  std::vector<std::size_t> sizes{10, 100, 1000, 10000};
  std::size_t reps = 500;
  double theta = 3.0;
  double sigma = 200.0;
  std::vector<std::string> methods{"mle", "curvefit"};
  std::uint64_t seed = 0;
  std::string out_prefix;
  std::size_t workers = 0;
};

inline void write_raw_csv(const ExperimentSummary& sum, std::ostream& out) {
  out << "n,rep,method,theta_hat,sigma_hat,q_hat,kappa_hat,converged\n";
  for (const auto& r : sum.raw) {
    out << r.n << ',' << r.rep << ',' << to_string(r.method) << ',' << format_double(r.theta) << ','
        << format_double(r.sigma) << ',' << format_double(r.q) << ',' << format_double(r.kappa)
        << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

inline void write_summary_csv(const ExperimentSummary& sum, std::ostream& out) {
  out << "n,method,q_median,q_p05,q_p95,q_min,q_max,failures\n";
  for (const auto& g : sum.groups) {
    out << g.n << ',' << to_string(g.method) << ',' << format_double(g.median()) << ','
        << format_double(g.p05()) << ',' << format_double(g.p95()) << ',' << format_double(g.min)
        << ',' << format_double(g.max) << ',' << g.failures << '\n';
  }
}

inline int cmd_experiment(const ExperimentOptions& o, std::ostream& out) {
  if (o.out_prefix.empty()) throw UsageError("--out-prefix is required");
  ExperimentPlan plan;
  plan.truth = ThetaSigma(o.theta, o.sigma);
  plan.sizes = o.sizes;
  plan.reps = o.reps;
  plan.methods.clear();
  for (const auto& m : o.methods) {
    if (m == "mle") {
      plan.methods.push_back(Method::mle);
    } else if (m == "curvefit") {
      plan.methods.push_back(Method::curvefit);
    } else {
      throw UsageError("unknown method '" + m + "' (expected mle or curvefit)");
    }
  }
  plan.seed = RngStream{o.seed, 0};
  plan.workers = o.workers;
  try {
    plan.validate();
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }

  const ExperimentSummary sum = run_experiment(plan);
  const std::string raw_path = o.out_prefix + "_raw.csv";
  const std::string summary_path = o.out_prefix + "_summary.csv";
  {
    std::ofstream f(raw_path);
    if (!f) throw DataError("cannot write '" + raw_path + "'");
    write_raw_csv(sum, f);
    if (!f) throw DataError("write failed for '" + raw_path + "'");
  }
  {
    std::ofstream f(summary_path);
    if (!f) throw DataError("cannot write '" + summary_path + "'");
    write_summary_csv(sum, f);
    if (!f) throw DataError("write failed for '" + summary_path + "'");
  }
  out << "truth theta=" << format_double(o.theta) << " sigma=" << format_double(o.sigma)
      << " q=" << format_double(to_q_kappa(plan.truth).q()) << " reps=" << o.reps
      << " seed=" << o.seed << "\n";
  write_summary_csv(sum, out);
  out << "wrote " << raw_path << "\nwrote " << summary_path << "\n";
  return kOk;
}

struct ValidateOptions {
  std::string input;
  double censor = 0.0;
  std::size_t boot = 200;
  std::uint64_t seed = 0;
  std::string format = "json";
  std::size_t workers = 0;
};

inline int cmd_validate(const ValidateOptions& o, std::ostream& out) {
  if (o.format != "json" && o.format != "text") throw UsageError("--format must be json or text");
  if (o.boot < kMinReplicatesForCi) {
    throw UsageError("--boot must be at least " + std::to_string(kMinReplicatesForCi));
  }
  const Sample s = ingest(o.input, o.censor);
  const FitResult fit = mle_joint_censored(s);

  Json report = detail::header("validate", o.input, s, o.seed);
  detail::merge(report, fit_fields(fit));
  BootstrapConfig bc;
  bc.B = o.boot;
  bc.workers = o.workers;
  bc.seed = RngStream{o.seed, 1};
  std::vector<std::string> errors;
  int code = kOk;
  if (!fit.converged) {
    errors.push_back(std::string("fit did not converge to an interior optimum (") +
                     std::string(to_string(fit.boundary_flag)) + ")");
    code = kNonConvergence;
  }
  // GOF still runs against a boundary fit; light-tailed data end up there.
  try {
    report["gof"] = gof_json(gof_bootstrap(s, fit, bc));
  } catch (const ConvergenceError& e) {
    report["gof"] = nullptr;
    errors.emplace_back(e.what());
    code = kNonConvergence;
  }
  bc.seed = RngStream{o.seed, 2};
  if (!fit.converged) {
    report["spec"] = nullptr;
  } else {
    try {
      report["spec"] = spec_json(spec_report(s, fit, bc));
    } catch (const BootstrapUnstable& e) {
      report["spec"] = nullptr;
      errors.emplace_back(e.what());
      code = kNonConvergence;
    }
  }

  if (s.censored()) {
    report["r_squared_mle"] = nullptr;
    report["r_squared_curvefit"] = nullptr;
  } else {
    report["r_squared_mle"] = r_squared(s, fit.params);
    try {
      const auto cf = curvefit(s);
      report["r_squared_curvefit"] = cf.r_squared;
    } catch (const Error&) {
      report["r_squared_curvefit"] = nullptr;
    }
  }
  report["r_squared_note"] =
      "R^2 of log S_n is shown for reference only; it is not a reliable specification check";
  report["errors"] = errors;
  emit(report, o.format, out);
  return code;
}

// ---------------------------------------------------------------------------
// Entry point

/// Parses args (without the program name) and runs one subcommand. Returns the
/// process exit code: 0 ok, 1 data error, 2 usage error, 3 non-convergence.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Maximum-likelihood fitting of q-exponential (type II generalized Pareto) laws", "qexp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "Fit a sample by maximum likelihood");
  fit->add_option("input", fo.input, "Data file, one value per line")->required();
  fit->add_option("--censor", fo.censor, "Left-censoring threshold x0 (only values >= x0 observed)");
  auto* ft = fit->add_option("--fix-theta", fo.fix_theta, "Hold theta fixed, estimate sigma");
  auto* fs = fit->add_option("--fix-sigma", fo.fix_sigma, "Hold sigma fixed, estimate theta");
  ft->excludes(fs);
  fit->add_option("--boot", fo.boot, "Bootstrap replicates (0 = none)");
  fit->add_option("--boot-mode", fo.boot_mode, "parametric | nonparametric")
      ->check(CLI::IsMember({"parametric", "nonparametric"}));
  fit->add_option("--ci", fo.ci, "Confidence level");
  fit->add_flag("--gof", fo.gof, "Bootstrap-calibrated KS goodness of fit");
  fit->add_option("--seed", fo.seed, "Random seed");
  fit->add_option("--info", fo.info, "expected | observed")
      ->check(CLI::IsMember({"expected", "observed"}));
  fit->add_option("--format", fo.format, "json | text")->check(CLI::IsMember({"json", "text"}));
  fit->add_option("--workers", fo.workers, "Worker threads (0 = all cores)");

  SampleOptions so;
  auto* smp = app.add_subcommand("sample", "Draw random values");
  smp->add_option("--theta", so.theta);
  smp->add_option("--sigma", so.sigma);
  smp->add_option("--q", so.q, "q > 1; ratios like 4/3 accepted");
  smp->add_option("--kappa", so.kappa, "kappa > 0; ratios like 200/3 accepted");
  smp->add_option("-n", so.n, "Number of values")->required();
  smp->add_option("--censor", so.censor, "Draw only from the tail above x0");
  smp->add_option("--seed", so.seed, "Random seed");

  ExperimentOptions eo;
  auto* exp = app.add_subcommand("experiment", "Monte Carlo comparison of MLE and curve fitting");
  exp->add_option("--sizes", eo.sizes, "Sample sizes, comma separated")->delimiter(',');
  exp->add_option("--reps", eo.reps, "Replications per size");
  exp->add_option("--theta", eo.theta);
  exp->add_option("--sigma", eo.sigma);
  exp->add_option("--methods", eo.methods, "mle,curvefit")->delimiter(',');
  exp->add_option("--seed", eo.seed, "Random seed");
  exp->add_option("--out-prefix", eo.out_prefix, "Writes <prefix>_raw.csv and <prefix>_summary.csv")
      ->required();
  exp->add_option("--workers", eo.workers, "Worker threads (0 = all cores)");

  ValidateOptions vo;
  auto* val = app.add_subcommand("validate", "Mis-specification diagnostics for a fitted sample");
  val->add_option("input", vo.input, "Data file, one value per line")->required();
  val->add_option("--censor", vo.censor, "Left-censoring threshold x0");
  val->add_option("--boot", vo.boot, "Bootstrap replicates");
  val->add_option("--seed", vo.seed, "Random seed");
  val->add_option("--format", vo.format, "json | text")->check(CLI::IsMember({"json", "text"}));
  val->add_option("--workers", vo.workers, "Worker threads (0 = all cores)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "qexp: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fo, out);
    if (smp->parsed()) return cmd_sample(so, out);
    if (exp->parsed()) return cmd_experiment(eo, out);
    if (val->parsed()) return cmd_validate(vo, out);
  } catch (const UsageError& e) {
    err << "qexp: usage: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "qexp: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const IllConditioned& e) {
    err << "qexp: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const BootstrapUnstable& e) {
    err << "qexp: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const Error& e) {
    err << "qexp: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace qexp::cli

#endif  // QEXP_CLI_HPP
