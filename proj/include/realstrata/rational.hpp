#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "realstrata/integer.hpp"

namespace realstrata {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt den(const Rational& r) { return boost::multiprecision::denominator(r); }

inline Int to_int(const BigInt& v) {
  if (v > BigInt(std::numeric_limits<Int>::max()) || v < BigInt(std::numeric_limits<Int>::min()))
    throw overflow_error("value does not fit in 64 bits");
  return static_cast<Int>(v);
}

/// Representative of r modulo m in [0, m).
inline Rational rational_mod(const Rational& r, const Rational& m) {
  BigInt n = num(r) * den(m);
  BigInt d = den(r) * num(m);
  BigInt q = n / d;
  if (n % d != 0 && n < 0) q -= 1;
  return r - Rational(q) * m;
}

inline Rational mod1(const Rational& r) { return rational_mod(r, Rational(1)); }
inline Rational mod2(const Rational& r) { return rational_mod(r, Rational(2)); }

inline std::string to_string(const Rational& r) {
  if (den(r) == 1) return num(r).str();
  return num(r).str() + "/" + den(r).str();
}

inline Rational parse_rational(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  auto parse_int = [&](std::string_view s) {
    s = trim(s);
    if (s.empty()) throw std::invalid_argument("empty integer in rational");
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw std::invalid_argument("malformed rational: " + std::string(text));
    for (std::size_t j = i; j < s.size(); ++j)
      if (!std::isdigit(static_cast<unsigned char>(s[j])))
        throw std::invalid_argument("malformed rational: " + std::string(text));
    return BigInt(std::string(s[0] == '+' ? s.substr(1) : s));
  };
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  BigInt d = parse_int(text.substr(slash + 1));
  if (d == 0) throw std::invalid_argument("zero denominator in rational: " + std::string(text));
  return Rational(parse_int(text.substr(0, slash)), d);
}

}  // namespace realstrata
