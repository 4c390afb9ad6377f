#pragma once

// Finite quadratic forms on G = Z/o_1 + ... + Z/o_k.
//
// Convention: q(x + y) = q(x) + q(y) + 2 b(x, y), so b(x, x) = q(x) mod 1.
// q is stored in [0, 2) and b in [0, 1).  Evaluation goes through integer
// tables scaled by a common denominator D.

#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "realstrata/abelian.hpp"
#include "realstrata/rational.hpp"

namespace realstrata {

using Element = IntVector;

class FiniteQuadraticForm {
 public:
  FiniteQuadraticForm() = default;

  /// `b` is the full symmetric table; its diagonal is ignored (it is q mod 1).
  FiniteQuadraticForm(IntVector orders, std::vector<Rational> q, std::vector<std::vector<Rational>> b,
                      bool require_nondegenerate = true)
      : orders_(std::move(orders)), q_(std::move(q)), b_(std::move(b)) {
    const std::size_t k = orders_.size();
    if (q_.size() != k) throw std::invalid_argument("q table has wrong length");
    if (b_.empty() && k > 0) b_.assign(k, std::vector<Rational>(k, Rational(0)));
    if (b_.size() != k) throw std::invalid_argument("b table has wrong size");
    for (const auto& row : b_)
      if (row.size() != k) throw std::invalid_argument("b table is not square");
    for (std::size_t i = 0; i < k; ++i) {
      if (orders_[i] < 2) throw std::invalid_argument("generator orders must be at least 2");
      q_[i] = mod2(q_[i]);
      b_[i][i] = mod1(q_[i]);
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        b_[i][j] = mod1(b_[i][j]);
      }
    }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        if (b_[i][j] != b_[j][i]) throw std::invalid_argument("b table is not symmetric");
    for (std::size_t i = 0; i < k; ++i) {
      const Rational o(orders_[i]);
      if (den(o * q_[i]) != 1 || mod2(o * o * q_[i]) != 0)
        throw std::invalid_argument("q(g_" + std::to_string(i) + ") is incompatible with its order");
      for (std::size_t j = 0; j < k; ++j)
        if (i != j && den(o * b_[i][j]) != 1)
          throw std::invalid_argument("b(g_i, g_j) is incompatible with the order of g_i");
    }
    build_tables();
    if (require_nondegenerate && !is_nondegenerate())
      throw std::invalid_argument("finite quadratic form is degenerate");
  }

  std::size_t rank() const { return orders_.size(); }
  const IntVector& orders() const { return orders_; }
  const Rational& q(std::size_t i) const { return q_[i]; }
  const Rational& b(std::size_t i, std::size_t j) const { return b_[i][j]; }
  const std::vector<Rational>& q_values() const { return q_; }
  const std::vector<std::vector<Rational>>& b_table() const { return b_; }

  /// Common denominator of all table entries.
  Int denominator() const { return denom_; }

  Int order() const {
    Int n = 1;
    for (Int o : orders_) n = checked_mul(n, o);
    return n;
  }

  Int exponent() const {
    Int e = 1;
    for (Int o : orders_) e = lcm(e, o);
    return e;
  }

  Element zero() const { return Element(rank(), 0); }

  Element generator(std::size_t i) const {
    Element e = zero();
    e[i] = 1;
    return e;
  }

  Element reduce(Element x) const {
    check_length(x);
    for (std::size_t i = 0; i < rank(); ++i) x[i] = mod(x[i], orders_[i]);
    return x;
  }

  Element add(const Element& x, const Element& y) const {
    check_length(x);
    check_length(y);
    Element z(rank());
    for (std::size_t i = 0; i < rank(); ++i) z[i] = mod(checked_add(x[i], y[i]), orders_[i]);
    return z;
  }

  Element scale(Int k, const Element& x) const {
    check_length(x);
    Element z(rank());
    for (std::size_t i = 0; i < rank(); ++i) z[i] = mod(checked_mul(mod(k, orders_[i]), mod(x[i], orders_[i])), orders_[i]);
    return z;
  }

  Element negate(const Element& x) const { return scale(-1, x); }

  Int element_order(const Element& x) const {
    check_length(x);
    Int ord = 1;
    for (std::size_t i = 0; i < rank(); ++i) ord = lcm(ord, orders_[i] / gcd(orders_[i], mod(x[i], orders_[i])));
    return ord;
  }

  /// D * q(x) reduced mod 2D.
  Int q_scaled(const Element& x) const {
    check_length(x);
    const Int m = 2 * denom_;
    Int acc = 0;
    for (std::size_t i = 0; i < rank(); ++i) {
      const Int xi = mod(x[i], orders_[i]);
      if (xi == 0) continue;
      acc = mod(checked_add(acc, mod(checked_mul(mod(checked_mul(xi, xi), m), qi_[i]), m)), m);
      for (std::size_t j = i + 1; j < rank(); ++j) {
        const Int xj = mod(x[j], orders_[j]);
        if (xj == 0 || bi_[i][j] == 0) continue;
        Int t = mod(checked_mul(mod(checked_mul(xi, xj), m), 2 * bi_[i][j]), m);
        acc = mod(checked_add(acc, t), m);
      }
    }
    return acc;
  }

  /// D * b(x, y) reduced mod D.
  Int b_scaled(const Element& x, const Element& y) const {
    check_length(x);
    check_length(y);
    Int acc = 0;
    for (std::size_t i = 0; i < rank(); ++i) {
      const Int xi = mod(x[i], orders_[i]);
      if (xi == 0) continue;
      for (std::size_t j = 0; j < rank(); ++j) {
        const Int yj = mod(y[j], orders_[j]);
        if (yj == 0 || bi_[i][j] == 0) continue;
        acc = mod(checked_add(acc, mod(checked_mul(mod(checked_mul(xi, yj), denom_), bi_[i][j]), denom_)), denom_);
      }
    }
    return acc;
  }

  Rational eval_q(const Element& x) const { return Rational(q_scaled(x), denom_); }
  Rational eval_b(const Element& x, const Element& y) const { return Rational(b_scaled(x, y), denom_); }

  /// Character x -> D b(x, h) in coordinates, for kernel computations.
  IntVector character(const Element& h) const {
    IntVector c(rank());
    for (std::size_t i = 0; i < rank(); ++i) c[i] = b_scaled(generator(i), h);
    return c;
  }

  /// Subgroup {x : b(x, h) = 0 for all h in hs}.
  Echelon annihilator(const std::vector<Element>& hs) const {
    IntMatrix unit;
    for (std::size_t i = 0; i < rank(); ++i) unit.push_back(generator(i));
    Echelon current = span(orders_, unit);
    for (const auto& h : hs) current = kernel_of_character(current, character(h), denom_);
    return current;
  }

  bool is_nondegenerate() const {
    IntMatrix unit;
    for (std::size_t i = 0; i < rank(); ++i) unit.push_back(generator(i));
    return annihilator(unit).subgroup_order() == 1;
  }

  bool operator==(const FiniteQuadraticForm& other) const {
    return orders_ == other.orders_ && q_ == other.q_ && b_ == other.b_;
  }

  /// Human readable form, e.g. "[1/4] + [-6/7]" for diagonal forms.
  std::string describe() const {
    if (rank() == 0) return "0";
    std::ostringstream out;
    bool diagonal = true;
    for (std::size_t i = 0; i < rank(); ++i)
      for (std::size_t j = 0; j < rank(); ++j)
        if (i != j && b_[i][j] != 0) diagonal = false;
    if (diagonal) {
      for (std::size_t i = 0; i < rank(); ++i) {
        if (i) out << " + ";
        out << "[" << to_string(signed_q(i)) << "] on Z/" << orders_[i];
      }
      return out.str();
    }
    out << "orders (";
    for (std::size_t i = 0; i < rank(); ++i) out << (i ? "," : "") << orders_[i];
    out << ") gram [";
    for (std::size_t i = 0; i < rank(); ++i) {
      out << (i ? "; " : "");
      for (std::size_t j = 0; j < rank(); ++j) out << (j ? " " : "") << to_string(i == j ? q_[i] : b_[i][j]);
    }
    out << "]";
    return out.str();
  }

  /// Representative of q(g_i) in (-1, 1].
  Rational signed_q(std::size_t i) const { return q_[i] > 1 ? q_[i] - 2 : q_[i]; }

 private:
  void check_length(const Element& x) const {
    if (x.size() != rank()) throw std::invalid_argument("element has wrong length for this form");
  }

  void build_tables() {
    const std::size_t k = rank();
    BigInt d = 1;
    for (std::size_t i = 0; i < k; ++i) {
      d = boost::multiprecision::lcm(d, den(q_[i]));
      for (std::size_t j = 0; j < k; ++j) d = boost::multiprecision::lcm(d, den(b_[i][j]));
    }
    denom_ = to_int(d);
    if (denom_ > (Int(1) << 30)) throw overflow_error("form denominator too large");
    qi_.assign(k, 0);
    bi_.assign(k, IntVector(k, 0));
    for (std::size_t i = 0; i < k; ++i) {
      qi_[i] = to_int(num(q_[i] * denom_));
      for (std::size_t j = 0; j < k; ++j) bi_[i][j] = to_int(num(b_[i][j] * denom_));
    }
  }

  IntVector orders_;
  std::vector<Rational> q_;
  std::vector<std::vector<Rational>> b_;
  Int denom_ = 1;
  IntVector qi_;
  IntMatrix bi_;
};

inline FiniteQuadraticForm trivial_form() { return FiniteQuadraticForm(); }

/// [m/n]: one generator of order n with q = m/n.
inline FiniteQuadraticForm cyclic_form(Int m, Int n) {
  if (n < 2) throw std::invalid_argument("cyclic form needs order at least 2");
  if (gcd(m, n) != 1) throw std::invalid_argument("cyclic form [m/n] needs gcd(m, n) = 1");
  if (mod(checked_mul(mod(m, 2), mod(n, 2)), 2) != 0) throw std::invalid_argument("cyclic form [m/n] needs mn even");
  return FiniteQuadraticForm({n}, {Rational(m, n)}, {{Rational(0)}});
}

inline FiniteQuadraticForm two_block(Int k, Int diag) {
  if (k < 1) throw std::invalid_argument("block exponent must be positive");
  const Int o = ipow(2, static_cast<int>(k));
  Rational d(diag, o), off(1, o);
  return FiniteQuadraticForm({o, o}, {d, d}, {{d, off}, {off, d}});
}

/// U(2^k): Gram (1/2^k) [[0,1],[1,0]].
inline FiniteQuadraticForm u_block(Int k) { return two_block(k, 0); }

/// V(2^k): Gram (1/2^k) [[2,1],[1,2]].
inline FiniteQuadraticForm v_block(Int k) { return two_block(k, 2); }

/// Form given by an arbitrary Gram table on an independent generating set.
inline FiniteQuadraticForm form_from_gram(IntVector orders, const std::vector<std::vector<Rational>>& gram,
                                          bool require_nondegenerate = true) {
  std::vector<Rational> q;
  for (std::size_t i = 0; i < gram.size(); ++i) q.push_back(gram[i][i]);
  return FiniteQuadraticForm(std::move(orders), std::move(q), gram, require_nondegenerate);
}

inline FiniteQuadraticForm direct_sum(const FiniteQuadraticForm& a, const FiniteQuadraticForm& b) {
  const std::size_t ka = a.rank(), kb = b.rank(), k = ka + kb;
  IntVector orders = a.orders();
  orders.insert(orders.end(), b.orders().begin(), b.orders().end());
  std::vector<Rational> q = a.q_values();
  q.insert(q.end(), b.q_values().begin(), b.q_values().end());
  std::vector<std::vector<Rational>> t(k, std::vector<Rational>(k, Rational(0)));
  for (std::size_t i = 0; i < ka; ++i)
    for (std::size_t j = 0; j < ka; ++j) t[i][j] = a.b(i, j);
  for (std::size_t i = 0; i < kb; ++i)
    for (std::size_t j = 0; j < kb; ++j) t[ka + i][ka + j] = b.b(i, j);
  return FiniteQuadraticForm(std::move(orders), std::move(q), std::move(t), false);
}

/// Form induced on the subgroup spanned by independent elements `gens` of F
/// (their orders must multiply to the order of the subgroup they span).
inline FiniteQuadraticForm restrict_form(const FiniteQuadraticForm& f, const std::vector<Element>& gens,
                                         bool require_nondegenerate = true) {
  IntVector orders;
  std::vector<Rational> q;
  std::vector<std::vector<Rational>> t(gens.size(), std::vector<Rational>(gens.size(), Rational(0)));
  for (std::size_t i = 0; i < gens.size(); ++i) {
    orders.push_back(f.element_order(gens[i]));
    q.push_back(f.eval_q(gens[i]));
    for (std::size_t j = 0; j < gens.size(); ++j) t[i][j] = f.eval_b(gens[i], gens[j]);
  }
  return FiniteQuadraticForm(std::move(orders), std::move(q), std::move(t), require_nondegenerate);
}

struct PrimaryPart {
  FiniteQuadraticForm form;
  std::vector<Element> embedding;  // images of the part's generators in F
  std::vector<std::size_t> source;  // index of the generator of F each one came from
};

/// p-Sylow part, generated by (o_i / p^v) g_i for each generator with p | o_i.
inline PrimaryPart p_part(const FiniteQuadraticForm& f, Int p) {
  PrimaryPart out;
  for (std::size_t i = 0; i < f.rank(); ++i) {
    const Int o = f.orders()[i];
    if (o % p != 0) continue;
    Int pp = 1;
    while (o % (pp * p) == 0) pp *= p;
    out.embedding.push_back(f.scale(o / pp, f.generator(i)));
    out.source.push_back(i);
  }
  out.form = restrict_form(f, out.embedding, false);
  return out;
}

inline int length_p(const FiniteQuadraticForm& f, Int p) {
  int n = 0;
  for (Int o : f.orders())
    if (o % p == 0) ++n;
  return n;
}

inline std::vector<Int> primes_of(const FiniteQuadraticForm& f) {
  std::vector<Int> ps;
  for (Int p : prime_divisors(f.order())) ps.push_back(p);
  return ps;
}

inline int length(const FiniteQuadraticForm& f) {
  int best = 0;
  for (Int p : primes_of(f)) best = std::max(best, length_p(f, p));
  return best;
}

/// False iff some element of order 2 in the 2-part has q = +-1/2.
inline bool is_even_2part(const FiniteQuadraticForm& f) {
  std::vector<Element> halves;
  for (std::size_t i = 0; i < f.rank(); ++i)
    if (f.orders()[i] % 2 == 0) halves.push_back(f.scale(f.orders()[i] / 2, f.generator(i)));
  const std::size_t n = halves.size();
  if (n > 30) throw std::length_error("2-rank too large for evenness scan");
  for (std::uint64_t mask = 1; mask < (std::uint64_t(1) << n); ++mask) {
    Element x = f.zero();
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) x = f.add(x, halves[i]);
    const Int qs = f.q_scaled(x);
    if (2 * qs == f.denominator() || 2 * qs == 3 * f.denominator()) return false;
  }
  return true;
}

inline nlohmann::json form_to_json(const FiniteQuadraticForm& f) {
  nlohmann::json j;
  j["orders"] = f.orders();
  nlohmann::json q = nlohmann::json::array();
  for (const auto& v : f.q_values()) q.push_back(to_string(v));
  j["q"] = q;
  nlohmann::json b = nlohmann::json::array();
  for (std::size_t i = 0; i < f.rank(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < f.rank(); ++k) row.push_back(to_string(f.b(i, k)));
    b.push_back(row);
  }
  j["b"] = b;
  return j;
}

inline FiniteQuadraticForm form_from_json(const nlohmann::json& j) {
  IntVector orders = j.at("orders").get<IntVector>();
  std::vector<Rational> q;
  for (const auto& v : j.at("q")) q.push_back(parse_rational(v.get<std::string>()));
  std::vector<std::vector<Rational>> b;
  if (j.contains("b")) {
    for (const auto& row : j.at("b")) {
      std::vector<Rational> r;
      for (const auto& v : row) r.push_back(parse_rational(v.get<std::string>()));
      b.push_back(std::move(r));
    }
  }
  FiniteQuadraticForm f(orders, q, b);
  for (std::size_t i = 0; i < b.size() && i < f.rank(); ++i)
    if (i < b[i].size() && mod1(b[i][i]) != f.b(i, i))
      throw std::invalid_argument("diagonal of b table disagrees with q");
  return f;
}

}  // namespace realstrata
