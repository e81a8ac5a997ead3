#pragma once

// Argument parsing helpers for the kpspin command line: angle literals,
// grid ranges and integer lists.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpspin::cli {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

// Accepts plain numbers and multiples of pi such as "pi", "-pi/2",
// "2pi/3", "2*pi/3", "0.5pi" or "3/4".
inline double parse_angle(const std::string& text) {
  const std::string s = detail::trim(text);
  if (s.empty()) throw std::invalid_argument("empty angle");
  std::string num = s, den;
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    num = detail::trim(s.substr(0, slash));
    den = detail::trim(s.substr(slash + 1));
    if (den.empty()) throw std::invalid_argument("bad angle '" + s + "'");
  }
  double value = 0.0;
  const auto p = num.find("pi");
  if (p != std::string::npos) {
    if (p + 2 != num.size()) throw std::invalid_argument("bad angle '" + s + "'");
    std::string coef = detail::trim(num.substr(0, p));
    if (!coef.empty() && coef.back() == '*') coef = detail::trim(coef.substr(0, coef.size() - 1));
    double c = 1.0;
    if (coef == "-") c = -1.0;
    else if (coef == "+" || coef.empty()) c = 1.0;
    else c = detail::parse_number(coef);
    value = c * std::numbers::pi;
  } else {
    value = detail::parse_number(num);
  }
  if (!den.empty()) {
    const double d = detail::parse_number(den);
    if (d == 0.0) throw std::invalid_argument("zero denominator in '" + s + "'");
    value /= d;
  }
  return value;
}

struct Range {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;
};

// "a:b:n" is n points from a to b inclusive; a single value is a one-point
// range.
inline Range parse_range(const std::string& text) {
  const std::string s = detail::trim(text);
  const auto c1 = s.find(':');
  if (c1 == std::string::npos) {
    const double v = parse_angle(s);
    return {v, v, 1};
  }
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string::npos || s.find(':', c2 + 1) != std::string::npos)
    throw std::invalid_argument("range must look like min:max:count, got '" + s + "'");
  Range r;
  r.min = parse_angle(s.substr(0, c1));
  r.max = parse_angle(s.substr(c1 + 1, c2 - c1 - 1));
  const double n = detail::parse_number(detail::trim(s.substr(c2 + 1)));
  if (n < 1 || n != std::floor(n)) throw std::invalid_argument("range count must be a positive integer in '" + s + "'");
  r.count = static_cast<std::size_t>(n);
  if (r.max < r.min) throw std::invalid_argument("range max below min in '" + s + "'");
  if (r.count == 1 && r.max != r.min) throw std::invalid_argument("one-point range needs min == max in '" + s + "'");
  return r;
}

inline std::vector<double> range_values(const Range& r) {
  std::vector<double> v(r.count);
  for (std::size_t i = 0; i < r.count; ++i)
    v[i] = r.count == 1 ? r.min : r.min + (r.max - r.min) * static_cast<double>(i) / static_cast<double>(r.count - 1);
  return v;
}

// "120:140" (inclusive integer run) or "120,125,130".
inline std::vector<int> parse_int_list(const std::string& text) {
  const std::string s = detail::trim(text);
  std::vector<int> out;
  auto as_int = [&](const std::string& t) {
    const double v = detail::parse_number(detail::trim(t));
    if (v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument("not an integer: '" + t + "'");
    return static_cast<int>(v);
  };
  const auto colon = s.find(':');
  if (colon != std::string::npos) {
    const int a = as_int(s.substr(0, colon)), b = as_int(s.substr(colon + 1));
    if (b < a) throw std::invalid_argument("integer run '" + s + "' is decreasing");
    for (int i = a; i <= b; ++i) out.push_back(i);
    return out;
  }
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    out.push_back(as_int(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace kpspin::cli
