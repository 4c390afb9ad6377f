#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace realstrata {

using Int = std::int64_t;

class overflow_error : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

inline Int checked_mul(Int a, Int b) {
  Int r;
  if (__builtin_mul_overflow(a, b, &r)) throw overflow_error("integer overflow in multiplication");
  return r;
}

inline Int checked_add(Int a, Int b) {
  Int r;
  if (__builtin_add_overflow(a, b, &r)) throw overflow_error("integer overflow in addition");
  return r;
}

inline Int checked_sub(Int a, Int b) {
  Int r;
  if (__builtin_sub_overflow(a, b, &r)) throw overflow_error("integer overflow in subtraction");
  return r;
}

/// Least nonnegative residue of a modulo m (m > 0).
inline Int mod(Int a, Int m) {
  Int r = a % m;
  return r < 0 ? r + m : r;
}

inline Int gcd(Int a, Int b) { return std::gcd(a, b); }

inline Int lcm(Int a, Int b) {
  if (a == 0 || b == 0) return 0;
  return checked_mul(a / gcd(a, b), b < 0 ? -b : b);
}

struct Xgcd {
  Int g;  // nonnegative
  Int s;
  Int t;  // s*a + t*b == g
};

inline Xgcd xgcd(Int a, Int b) {
  Int old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    Int q = old_r / r;
    std::tie(old_r, r) = std::pair{r, old_r - q * r};
    std::tie(old_s, s) = std::pair{s, old_s - q * s};
    std::tie(old_t, t) = std::pair{t, old_t - q * t};
  }
  if (old_r < 0) return {-old_r, -old_s, -old_t};
  return {old_r, old_s, old_t};
}

/// Inverse of a modulo m; throws if not invertible.
inline Int inverse_mod(Int a, Int m) {
  auto [g, s, t] = xgcd(mod(a, m), m);
  (void)t;
  if (g != 1) throw std::domain_error("element not invertible modulo m");
  return mod(s, m);
}

inline Int ipow(Int base, int exp) {
  Int r = 1;
  for (int i = 0; i < exp; ++i) r = checked_mul(r, base);
  return r;
}

/// p-adic valuation of a nonzero integer.
inline int valuation(Int a, Int p) {
  if (a == 0) throw std::domain_error("valuation of zero");
  int v = 0;
  while (a % p == 0) {
    a /= p;
    ++v;
  }
  return v;
}

/// Prime factors of n > 0, ascending, without multiplicity.
inline std::vector<Int> prime_divisors(Int n) {
  std::vector<Int> ps;
  if (n < 0) n = -n;
  for (Int p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      ps.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) ps.push_back(n);
  return ps;
}

inline std::vector<Int> divisors(Int n) {
  std::vector<Int> ds;
  for (Int d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      ds.push_back(d);
      if (d * d != n) ds.push_back(n / d);
    }
  }
  std::sort(ds.begin(), ds.end());
  return ds;
}

/// Legendre symbol (a/p) for an odd prime p; 0 when p | a.
inline int legendre(Int a, Int p) {
  a = mod(a, p);
  if (a == 0) return 0;
  Int r = 1, b = a, e = (p - 1) / 2;
  while (e > 0) {
    if (e & 1) r = static_cast<Int>((static_cast<__int128>(r) * b) % p);
    b = static_cast<Int>((static_cast<__int128>(b) * b) % p);
    e >>= 1;
  }
  return r == 1 ? 1 : -1;
}

}  // namespace realstrata
