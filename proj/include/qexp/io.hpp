#ifndef QEXP_IO_HPP
#define QEXP_IO_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qexp/errors.hpp"
#include "qexp/sample.hpp"

namespace qexp {

/// Shortest decimal with 17 significant digits, '.' separator, no locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

/// Parses a full token as a double; nullopt on any trailing garbage.
inline std::optional<double> parse_double(std::string_view tok) {
  tok = trim(tok);
  if (tok.empty()) return std::nullopt;
  if (tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

/// A number written either as a decimal or as a ratio "a/b".
struct Rational {
  double num = 0.0;
  double den = 1.0;
  double value() const noexcept { return num / den; }
};

inline std::optional<Rational> parse_rational(std::string_view tok) {
  tok = trim(tok);
  const auto slash = tok.find('/');
  if (slash == std::string_view::npos) {
    const auto v = parse_double(tok);
    if (!v) return std::nullopt;
    return Rational{*v, 1.0};
  }
  const auto a = parse_double(tok.substr(0, slash));
  const auto b = parse_double(tok.substr(slash + 1));
  if (!a || !b || *b == 0.0) return std::nullopt;
  return Rational{*a, *b};
}

/// Reads one value per line; blank lines and lines starting with '#' are
/// skipped. Errors cite 1-based line numbers.
inline Sample ingest(std::istream& in, double x0 = 0.0, const std::string& source = "<input>") {
  if (!std::isfinite(x0) || x0 < 0.0) {
    throw DataError("censoring threshold must be finite and >= 0");
  }
  std::vector<double> values;
  std::vector<std::size_t> negative_lines;
  std::vector<std::size_t> below_lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = trim(line);
    if (tok.empty() || tok.front() == '#') continue;
    const auto v = parse_double(tok);
    if (!v || !std::isfinite(*v)) {
      throw DataError(source + ":" + std::to_string(lineno) + ": cannot parse '" + std::string(tok) +
                          "' as a finite number",
                      {lineno});
    }
    if (*v < 0.0) {
      negative_lines.push_back(lineno);
    } else if (*v < x0) {
      below_lines.push_back(lineno);
    }
    values.push_back(*v);
  }
  auto list = [](const std::vector<std::size_t>& ls) {
    std::string s;
    for (std::size_t i = 0; i < ls.size(); ++i) s += (i ? ", " : "") + std::to_string(ls[i]);
    return s;
  };
  if (!negative_lines.empty()) {
    throw DataError(source + ": negative values (support is [0, inf)) on line(s) " +
                        list(negative_lines),
                    negative_lines);
  }
  if (!below_lines.empty()) {
    std::ostringstream msg;
    msg << source << ": values below the censoring threshold " << format_double(x0)
        << " on line(s) " << list(below_lines);
    throw DataError(msg.str(), below_lines);
  }
  if (values.empty()) throw DataError(source + ": no data values");
  return Sample(std::move(values), x0);
}

inline Sample ingest(const std::string& path, double x0 = 0.0) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return ingest(in, x0, path);
}

}  // namespace qexp

#endif  // QEXP_IO_HPP
