#ifndef QEXP_DETAIL_PROFILE_SEARCH_HPP
#define QEXP_DETAIL_PROFILE_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "qexp/errors.hpp"

namespace qexp::detail {

enum class SearchBound { interior, lower, upper };

struct ScaleOptimum {
  double sigma = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  SearchBound bound = SearchBound::interior;
  std::size_t evaluations = 0;
};

struct ScaleSearchOptions {
  double anchor = 1.0;          // centre of the initial bracket
  double bracket_factor = 10.0; // initial bracket [anchor/f, anchor*f]
  double floor = 0.0;           // hard lower limit on sigma (> 0)
  double ceiling = 0.0;         // hard upper limit on sigma
  std::size_t max_iter = 200;   // per root refinement
  int points_per_decade = 8;    // scan density used to locate sign changes
};

// Maximizes value(sigma) over [floor, ceiling]. slope(sigma) must be the
// derivative of value with respect to log(sigma) (only its sign and root
// matter). The bracket around the anchor is widened geometrically until the
// slope points inward or a hard limit is reached, then scanned on a log grid;
// every + to - sign change is refined with TOMS 748 and the best stationary
// point (or hard limit) by value wins.
template <class Value, class Slope>
ScaleOptimum maximize_over_scale(Value&& value, Slope&& slope, const ScaleSearchOptions& opt) {
  if (!(opt.floor > 0.0) || !(opt.ceiling > opt.floor) || !std::isfinite(opt.ceiling)) {
    throw InvalidParameter("scale search: need 0 < floor < ceiling < inf");
  }
  if (!(opt.bracket_factor > 1.0)) throw InvalidParameter("scale search: bracket factor must be > 1");

  std::size_t evals = 0;
  auto checked_slope = [&](double s) {
    ++evals;
    const double g = slope(s);
    if (std::isnan(g)) throw ConvergenceError("scale search: slope evaluated to NaN");
    return g;
  };

  double anchor = std::clamp(opt.anchor, opt.floor, opt.ceiling);
  double lo = std::max(anchor / opt.bracket_factor, opt.floor);
  double hi = std::min(anchor * opt.bracket_factor, opt.ceiling);
  if (!(hi > lo)) hi = std::min(lo * opt.bracket_factor, opt.ceiling);

  double g_lo = checked_slope(lo);
  while (g_lo < 0.0 && lo > opt.floor) {
    lo = std::max(lo / opt.bracket_factor, opt.floor);
    g_lo = checked_slope(lo);
  }
  double g_hi = checked_slope(hi);
  while (g_hi > 0.0 && hi < opt.ceiling) {
    hi = std::min(hi * opt.bracket_factor, opt.ceiling);
    g_hi = checked_slope(hi);
  }

  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  const double decades = (log_hi - log_lo) / std::log(10.0);
  const auto cells = static_cast<std::size_t>(
      std::max(2.0, std::ceil(decades * static_cast<double>(opt.points_per_decade))));

  std::vector<double> grid(cells + 1);
  std::vector<double> slopes(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    grid[k] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(k) / static_cast<double>(cells));
  }
  grid.front() = lo;
  grid.back() = hi;
  slopes.front() = g_lo;
  slopes.back() = g_hi;
  for (std::size_t k = 1; k < cells; ++k) slopes[k] = checked_slope(grid[k]);

  struct Candidate {
    double sigma;
    SearchBound bound;
  };
  std::vector<Candidate> candidates;
  if (slopes.front() <= 0.0) {
    candidates.push_back({lo, lo <= opt.floor ? SearchBound::lower : SearchBound::interior});
  }
  if (slopes.back() >= 0.0) {
    candidates.push_back({hi, hi >= opt.ceiling ? SearchBound::upper : SearchBound::interior});
  }

  const int digits = std::numeric_limits<double>::digits - 3;
  for (std::size_t k = 0; k < cells; ++k) {
    if (!(slopes[k] > 0.0 && slopes[k + 1] <= 0.0)) continue;
    if (slopes[k + 1] == 0.0) {
      candidates.push_back({grid[k + 1], SearchBound::interior});
      continue;
    }
    std::uintmax_t iters = opt.max_iter;
    auto bracket = boost::math::tools::toms748_solve(
        [&](double s) { return checked_slope(s); }, grid[k], grid[k + 1], slopes[k], slopes[k + 1],
        boost::math::tools::eps_tolerance<double>(digits), iters);
    const double a = bracket.first;
    const double b = bracket.second;
    const double root = std::abs(checked_slope(a)) <= std::abs(checked_slope(b)) ? a : b;
    candidates.push_back({root, SearchBound::interior});
  }

  ScaleOptimum best;
  for (const auto& c : candidates) {
    const double v = value(c.sigma);
    if (std::isnan(v)) continue;
    if (v > best.value) {
      best.sigma = c.sigma;
      best.value = v;
      best.bound = c.bound;
    }
  }
  if (!std::isfinite(best.sigma) || best.sigma <= 0.0 || best.value == -std::numeric_limits<double>::infinity()) {
    throw ConvergenceError("scale search: no finite optimum located");
  }
  best.evaluations = evals;
  return best;
}

}  // namespace qexp::detail

#endif  // QEXP_DETAIL_PROFILE_SEARCH_HPP
