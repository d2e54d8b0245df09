#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qexp/cli.hpp"

namespace qexp {
namespace {

namespace fs = std::filesystem;
using cli::Json;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("qexp_cli_test_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(file(name)) << content;
    return file(name);
  }
  std::string write_values(const std::string& name, const std::vector<double>& v) const {
    std::ostringstream s;
    for (double x : v) s << format_double(x) << "\n";
    return write(name, s.str());
  }

 private:
  fs::path path_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ----- ingestion -----------------------------------------------------------

TEST(IngestTest, SkipsCommentsAndBlanks) {
  std::istringstream in("1\n2\n# comment\n3\n");
  const Sample s = ingest(in);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[2], 3.0);
  EXPECT_EQ(s.x0(), 0.0);
  std::istringstream in2("\n  4.5  \n\t\n#x\n6e2\n");
  const Sample t = ingest(in2);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1], 600.0);
}

template <class F>
std::vector<std::size_t> data_error_lines(F&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.lines();
  }
  ADD_FAILURE() << "expected DataError";
  return {};
}

TEST(IngestTest, Errors) {
  EXPECT_EQ(data_error_lines([] {
              std::istringstream in("1\n-1\n2\n");
              ingest(in);
            }),
            std::vector<std::size_t>{2});
  EXPECT_EQ(data_error_lines([] {
              std::istringstream in("60\n49.9\n# c\n10\n");
              ingest(in, 50.0);
            }),
            (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(data_error_lines([] {
              std::istringstream in("1\n\n2x\n");
              ingest(in);
            }),
            std::vector<std::size_t>{3});
  EXPECT_THROW(
      {
        std::istringstream in("# only a comment\n\n");
        ingest(in);
      },
      DataError);
  EXPECT_THROW(
      {
        std::istringstream in("nan\n");
        ingest(in);
      },
      DataError);
  EXPECT_THROW(ingest(std::string("/nonexistent/qexp/data.txt")), DataError);
}

TEST(IngestTest, MessageNamesTheLine) {
  std::istringstream in("60\n49.9\n");
  try {
    ingest(in, 50.0, "data.txt");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line(s) 2"), std::string::npos) << e.what();
  }
}

TEST(FormatTest, SeventeenDigitsRoundTrip) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::pow(10.0, u(gen)) * (i % 2 ? 1.0 : 1.0 / 3.0);
    const auto back = parse_double(format_double(x));
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(NAN), "nan");
}

TEST(FormatTest, Rationals) {
  const auto r = parse_rational("4/3");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->num, 4.0);
  EXPECT_EQ(r->den, 3.0);
  EXPECT_EQ(parse_rational("2.5")->value(), 2.5);
  EXPECT_FALSE(parse_rational("1/0"));
  EXPECT_FALSE(parse_rational("a/3"));
  EXPECT_FALSE(parse_double("1.5x"));
}

// ----- sample ---------------------------------------------------------------

TEST(CliSampleTest, ParameterizationsAgree) {
  const auto a = run({"sample", "--theta", "3", "--sigma", "200", "-n", "50", "--seed", "9"});
  const auto b = run({"sample", "--q", "4/3", "--kappa", "200/3", "-n", "50", "--seed", "9"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(CliSampleTest, LineCountAndTail) {
  const auto a = run({"sample", "--theta", "3", "--sigma", "200", "-n", "5"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 5);
  const auto b = run({"sample", "--theta", "3", "--sigma", "200", "-n", "500", "--censor", "50"});
  ASSERT_EQ(b.code, 0);
  std::istringstream in(b.out);
  const Sample s = ingest(in);
  EXPECT_EQ(s.size(), 500u);
  for (double x : s.values()) EXPECT_GE(x, 50.0);
}

TEST(CliSampleTest, DeterministicPerSeed) {
  const std::vector<std::string> args{"sample", "--theta", "2", "--sigma", "7", "-n", "20", "--seed", "3"};
  EXPECT_EQ(run(args).out, run(args).out);
  auto other = args;
  other.back() = "4";
  EXPECT_NE(run(args).out, run(other).out);
}

TEST(CliSampleTest, UsageErrors) {
  EXPECT_EQ(run({"sample", "-n", "5"}).code, cli::kUsage);
  EXPECT_EQ(run({"sample", "--theta", "3", "--sigma", "200", "--q", "1.5", "-n", "5"}).code,
            cli::kUsage);
  EXPECT_EQ(run({"sample", "--theta", "3", "-n", "5"}).code, cli::kUsage);
  EXPECT_EQ(run({"sample", "--q", "1", "--kappa", "2", "-n", "5"}).code, cli::kUsage);
  EXPECT_EQ(run({"sample", "--theta", "abc", "--sigma", "2", "-n", "5"}).code, cli::kUsage);
  EXPECT_EQ(run({"sample", "--theta", "3", "--sigma", "200", "-n", "0"}).code, cli::kUsage);
  EXPECT_EQ(run({"sample", "--theta", "3", "--sigma", "200"}).code, cli::kUsage);
}

// ----- fit ------------------------------------------------------------------

std::string simulated_file(const TempDir& dir, std::size_t n, std::uint64_t seed,
                           double x0 = 0.0) {
  const auto s = sample_tail(ThetaSigma(3.0, 200.0), x0, n, RngStream{seed, 0});
  return dir.write_values("sim_" + std::to_string(n) + "_" + std::to_string(seed) + ".txt",
                          std::vector<double>(s.values().begin(), s.values().end()));
}

TEST(CliFitTest, LargeSimulatedSample) {
  TempDir dir;
  const auto path = simulated_file(dir, 10000, 1);
  const auto r = run({"fit", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  for (const char* key : {"n", "x0", "theta", "sigma", "q", "kappa", "loglik", "converged",
                          "boundary_flag", "se", "ci", "bootstrap", "gof"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["n"].get<std::size_t>(), 10000u);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_EQ(j["boundary_flag"], "interior");
  const double q = j["q"].get<double>();
  const double se_q = j["se"]["q"].get<double>();
  EXPECT_NEAR(q, 4.0 / 3.0, 3.0 * se_q);
  EXPECT_NEAR(se_q, std::sqrt(1.778 / 10000.0), 0.1 * se_q);
  const auto ci = j["ci"]["q"];
  EXPECT_LT(ci[0].get<double>(), q);
  EXPECT_GT(ci[1].get<double>(), q);
}

TEST(CliFitTest, FixedSigmaDelegates) {
  TempDir dir;
  const auto path = simulated_file(dir, 500, 2);
  const auto r = run({"fit", path, "--fix-sigma", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["theta"].get<double>(), mle_theta_given_sigma(ingest(path), 200.0));
  EXPECT_EQ(j["sigma"].get<double>(), 200.0);
  EXPECT_EQ(j["fixed"], "sigma");
  EXPECT_EQ(j["se"]["sigma"].get<double>(), 0.0);

  const auto t = run({"fit", path, "--fix-theta", "3"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(Json::parse(t.out)["sigma"].get<double>(), mle_sigma_given_theta(ingest(path), 3.0));
}

TEST(CliFitTest, ZeroCensoringIsNoCensoring) {
  TempDir dir;
  const auto path = simulated_file(dir, 300, 3);
  EXPECT_EQ(run({"fit", path}).out, run({"fit", path, "--censor", "0"}).out);
}

TEST(CliFitTest, CensoredFit) {
  TempDir dir;
  const auto path = simulated_file(dir, 5000, 4, 50.0);
  const auto r = run({"fit", path, "--censor", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["x0"].get<double>(), 50.0);
  EXPECT_NEAR(j["theta"].get<double>(), 3.0, 3.0 * j["se"]["theta"].get<double>());
  // Same file without --censor is a different model.
  EXPECT_NE(Json::parse(run({"fit", path}).out)["theta"], j["theta"]);
}

TEST(CliFitTest, JsonRoundTripsLosslessly) {
  TempDir dir;
  const auto path = simulated_file(dir, 400, 5);
  const auto r = run({"fit", path, "--boot", "100", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j.dump(2) + "\n", r.out);
  EXPECT_EQ(Json::parse(j.dump()), j);
  const FitResult f = mle_joint(ingest(path));
  EXPECT_EQ(j["theta"].get<double>(), f.params.theta());
  EXPECT_EQ(j["loglik"].get<double>(), f.loglik);
  EXPECT_EQ(j["bootstrap"]["B"].get<std::size_t>(), 100u);
}

TEST(CliFitTest, BootstrapAndGofDeterministicAcrossWorkers) {
  TempDir dir;
  const auto path = simulated_file(dir, 300, 6);
  const auto a = run({"fit", path, "--boot", "120", "--gof", "--seed", "11", "--workers", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  for (const char* w : {"2", "8"}) {
    EXPECT_EQ(run({"fit", path, "--boot", "120", "--gof", "--seed", "11", "--workers", w}).out,
              a.out)
        << w;
  }
  const Json j = Json::parse(a.out);
  EXPECT_EQ(j["gof"]["B_requested"].get<std::size_t>(), 120u);
  EXPECT_GT(j["gof"]["p_value"].get<double>(), 0.0);
}

TEST(CliFitTest, TextFormat) {
  TempDir dir;
  const auto path = simulated_file(dir, 200, 7);
  const auto r = run({"fit", path, "--format", "text"});
  ASSERT_EQ(r.code, 0);
  const FitResult f = mle_joint(ingest(path));
  EXPECT_NE(r.out.find("theta: " + format_double(f.params.theta()) + "\n"), std::string::npos);
  EXPECT_NE(r.out.find("se.q: "), std::string::npos);
  EXPECT_NE(r.out.find("boundary_flag: interior"), std::string::npos);
}

TEST(CliFitTest, ExitCodes) {
  TempDir dir;
  const auto good = simulated_file(dir, 200, 8);
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run({"fit"}).code, cli::kUsage);
  EXPECT_EQ(run({"fit", good, "--fix-theta", "1", "--fix-sigma", "2"}).code, cli::kUsage);
  EXPECT_EQ(run({"fit", good, "--fix-theta", "1", "--boot", "200"}).code, cli::kUsage);
  EXPECT_EQ(run({"fit", good, "--boot", "50"}).code, cli::kUsage);
  EXPECT_EQ(run({"fit", good, "--ci", "1.5"}).code, cli::kUsage);
  EXPECT_EQ(run({"fit", good, "--info", "weird"}).code, cli::kUsage);
  EXPECT_EQ(run({"fit", dir.file("missing.txt")}).code, cli::kDataError);
  EXPECT_EQ(run({"fit", dir.write("neg.txt", "1\n-2\n")}).code, cli::kDataError);
  EXPECT_EQ(run({"fit", dir.write("one.txt", "1\n")}).code, cli::kDataError);
  EXPECT_EQ(run({"fit", good, "--censor", "1e9"}).code, cli::kDataError);

  // Uniform data: the likelihood increases all the way to the exponential limit.
  std::ostringstream u;
  for (int i = 1; i <= 200; ++i) u << i / 200.0 << "\n";
  const auto r = run({"fit", dir.write("uniform.txt", u.str())});
  EXPECT_EQ(r.code, cli::kNonConvergence);
  const Json j = Json::parse(r.out);
  EXPECT_FALSE(j["converged"].get<bool>());
  EXPECT_EQ(j["boundary_flag"], "sigma_upper_bound");
  EXPECT_TRUE(j["se"].is_null());
  EXPECT_FALSE(j["errors"].empty());
}

TEST(CliFitTest, VersionAndHelp) {
  const auto v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out, std::string(cli::kVersion) + "\n");
  const auto h = run({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("experiment"), std::string::npos);
}

// ----- experiment -----------------------------------------------------------

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Midpoint-interpolated quantile, written independently of the library.
double hazen(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * v.size() - 0.5;  // 0-based
  if (pos <= 0) return v.front();
  if (pos >= v.size() - 1.0) return v.back();
  const auto i = static_cast<std::size_t>(pos);
  return v[i] + (pos - i) * (v[i + 1] - v[i]);
}

TEST(CliExperimentTest, CsvFilesAndRecomputation) {
  TempDir dir;
  const auto prefix = dir.file("exp");
  const auto r = run({"experiment", "--sizes", "10,50", "--reps", "30", "--seed", "5",
                      "--out-prefix", prefix, "--workers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto raw = read_csv(prefix + "_raw.csv");
  const auto sum = read_csv(prefix + "_summary.csv");
  ASSERT_EQ(raw.size(), 1u + 2u * 30u * 2u);
  EXPECT_EQ(raw[0], (std::vector<std::string>{"n", "rep", "method", "theta_hat", "sigma_hat",
                                                "q_hat", "kappa_hat", "converged"}));
  EXPECT_EQ(sum[0], (std::vector<std::string>{"n", "method", "q_median", "q_p05", "q_p95",
                                                "q_min", "q_max", "failures"}));
  ASSERT_EQ(sum.size(), 5u);

  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::map<std::pair<std::string, std::string>, int> failures;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const auto key = std::make_pair(raw[i][0], raw[i][2]);
    if (raw[i][7] == "1") {
      groups[key].push_back(std::stod(raw[i][5]));
    } else {
      ++failures[key];
    }
  }
  for (std::size_t i = 1; i < sum.size(); ++i) {
    const auto key = std::make_pair(sum[i][0], sum[i][1]);
    const auto& v = groups[key];
    EXPECT_NEAR(std::stod(sum[i][2]), hazen(v, 0.5), 1e-12);
    EXPECT_NEAR(std::stod(sum[i][3]), hazen(v, 0.05), 1e-12);
    EXPECT_NEAR(std::stod(sum[i][4]), hazen(v, 0.95), 1e-12);
    EXPECT_EQ(std::stod(sum[i][5]), *std::min_element(v.begin(), v.end()));
    EXPECT_EQ(std::stod(sum[i][6]), *std::max_element(v.begin(), v.end()));
    EXPECT_EQ(std::stoi(sum[i][7]), failures[key]);
  }
  EXPECT_NE(r.out.find("n,method,q_median"), std::string::npos);
}

TEST(CliExperimentTest, DeterministicAcrossWorkers) {
  TempDir dir;
  std::string ref_raw, ref_sum, ref_out;
  for (const char* w : {"1", "2", "8"}) {
    const auto prefix = dir.file(std::string("w") + w);
    const auto r = run({"experiment", "--sizes", "10,100", "--reps", "25", "--seed", "8",
                        "--out-prefix", prefix, "--workers", w});
    ASSERT_EQ(r.code, 0);
    const auto raw = read_file(prefix + "_raw.csv");
    const auto sum = read_file(prefix + "_summary.csv");
    const auto out = r.out.substr(0, r.out.find("wrote "));
    if (ref_raw.empty()) {
      ref_raw = raw, ref_sum = sum, ref_out = out;
    } else {
      EXPECT_EQ(raw, ref_raw) << w;
      EXPECT_EQ(sum, ref_sum) << w;
      EXPECT_EQ(out, ref_out) << w;
    }
  }
}

TEST(CliExperimentTest, Errors) {
  TempDir dir;
  EXPECT_EQ(run({"experiment", "--sizes", "10", "--reps", "2", "--out-prefix",
                 dir.file("no/such/dir/x")})
                .code,
            cli::kDataError);
  EXPECT_EQ(run({"experiment", "--sizes", "100,10", "--out-prefix", dir.file("x")}).code,
            cli::kUsage);
  EXPECT_EQ(run({"experiment", "--methods", "mle,ols", "--out-prefix", dir.file("x")}).code,
            cli::kUsage);
  EXPECT_EQ(run({"experiment", "--sizes", "10"}).code, cli::kUsage);
}

// ----- validate -------------------------------------------------------------

TEST(CliValidateTest, CorrectModel) {
  TempDir dir;
  const auto path = simulated_file(dir, 1000, 9);
  const auto r = run({"validate", path, "--boot", "100", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  const auto& g = j["gof"];
  EXPECT_EQ(g["B_requested"].get<std::size_t>(), 100u);
  EXPECT_LE(g["B_used"].get<std::size_t>(), 100u);
  EXPECT_TRUE(j["spec"].is_object());
  EXPECT_TRUE(j["spec"]["thresholds"].contains("note"));
  EXPECT_TRUE(j["r_squared_mle"].is_number());
  EXPECT_TRUE(j["r_squared_curvefit"].is_number());
  for (const auto& f : j["spec"]["flags"]) {
    EXPECT_EQ(f.get<std::string>().rfind("heuristic:", 0), 0u);
  }
}

TEST(CliValidateTest, LogNormalRejectedDespiteHighRSquared) {
  TempDir dir;
  const auto path = dir.write_values("ln.txt", oracle::lognormal_sample(10000, 77, 5.0, 1.0));
  const auto r = run({"validate", path, "--boot", "100", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_LT(j["gof"]["p_value"].get<double>(), 0.05);
  EXPECT_GE(j["r_squared_curvefit"].get<double>(), 0.95);
}

TEST(CliValidateTest, BoundaryFitReportsGofAndExitsThree) {
  TempDir dir;
  const auto path = dir.write_values("narrow.txt", oracle::lognormal_sample(5000, 78, 1.0, 0.3));
  const auto r = run({"validate", path, "--boot", "100"});
  EXPECT_EQ(r.code, cli::kNonConvergence);
  const Json j = Json::parse(r.out);
  EXPECT_FALSE(j["converged"].get<bool>());
  EXPECT_LT(j["gof"]["p_value"].get<double>(), 0.05);
  EXPECT_TRUE(j["spec"].is_null());
  EXPECT_FALSE(j["errors"].empty());
}

TEST(CliValidateTest, DeterministicAcrossWorkers) {
  TempDir dir;
  const auto path = simulated_file(dir, 300, 10);
  const auto a = run({"validate", path, "--boot", "100", "--seed", "4", "--workers", "1"});
  for (const char* w : {"2", "8"}) {
    EXPECT_EQ(run({"validate", path, "--boot", "100", "--seed", "4", "--workers", w}).out, a.out);
  }
  EXPECT_EQ(run({"validate", path, "--boot", "99"}).code, cli::kUsage);
}

// ----- the installed binary -------------------------------------------------

Run run_binary(const std::string& args) {
  const std::string cmd = std::string(QEXP_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, {}};
}

TEST(CliBinaryTest, MatchesInProcessAndExitCodes) {
  const auto b = run_binary("sample --theta 3 --sigma 200 -n 4 --seed 12");
  EXPECT_EQ(b.code, 0);
  EXPECT_EQ(b.out, run({"sample", "--theta", "3", "--sigma", "200", "-n", "4", "--seed", "12"}).out);
  EXPECT_EQ(run_binary("").code, cli::kUsage);
  EXPECT_EQ(run_binary("fit /nonexistent/file").code, cli::kDataError);
  TempDir dir;
  std::ostringstream u;
  for (int i = 1; i <= 100; ++i) u << i << "\n";
  EXPECT_EQ(run_binary("fit " + dir.write("u.txt", u.str())).code, cli::kNonConvergence);
}

}  // namespace
}  // namespace qexp
