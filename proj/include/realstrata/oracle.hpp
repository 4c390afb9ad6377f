#pragma once

// Brute-force reference computations on explicit element tables. Nothing here
// uses the echelon machinery; everything is by enumeration.

#include <algorithm>
#include <functional>
#include <tuple>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "realstrata/candidate.hpp"
#include "realstrata/fqf.hpp"
#include "realstrata/lattices.hpp"
#include "realstrata/nikulin.hpp"

namespace realstrata::oracle {

class cutoff_exceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr Int kDefaultCutoff = 4096;

class ElementTable {
 public:
  explicit ElementTable(const FiniteQuadraticForm& f, Int cutoff = kDefaultCutoff) : orders_(f.orders()) {
    Int total = 1;
    for (Int o : orders_) {
      total *= o;
      if (total > cutoff) throw cutoff_exceeded("form of order > " + std::to_string(cutoff) + " exceeds the oracle cutoff");
    }
    denom_ = 1;
    for (const auto& q : f.q_values()) denom_ = lcm(denom_, to_int(den(q)));
    for (std::size_t i = 0; i < f.rank(); ++i)
      for (std::size_t j = 0; j < f.rank(); ++j) denom_ = lcm(denom_, to_int(den(f.b(i, j))));
    size_ = static_cast<std::size_t>(total);
    q_.resize(size_);
    for (std::size_t idx = 0; idx < size_; ++idx) {
      const Element x = element(idx);
      Rational v = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!x[i]) continue;
        v += f.q_values()[i] * x[i] * x[i];
        for (std::size_t j = i + 1; j < x.size(); ++j)
          if (x[j]) v += 2 * f.b(i, j) * x[i] * x[j];
      }
      v = mod2(v);
      q_[idx] = to_int(num(v * denom_));
    }
  }

  std::size_t size() const { return size_; }
  const IntVector& orders() const { return orders_; }
  Int denominator() const { return denom_; }

  Element element(std::size_t idx) const {
    Element x(orders_.size());
    for (std::size_t i = orders_.size(); i-- > 0;) {
      x[i] = static_cast<Int>(idx % static_cast<std::size_t>(orders_[i]));
      idx /= static_cast<std::size_t>(orders_[i]);
    }
    return x;
  }

  std::size_t index(const Element& x) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < orders_.size(); ++i)
      idx = idx * static_cast<std::size_t>(orders_[i]) + static_cast<std::size_t>(mod(x[i], orders_[i]));
    return idx;
  }

  std::size_t add(std::size_t a, std::size_t b) const {
    Element x = element(a), y = element(b);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = mod(x[i] + y[i], orders_[i]);
    return index(x);
  }

  std::size_t neg(std::size_t a) const {
    Element x = element(a);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = mod(-x[i], orders_[i]);
    return index(x);
  }

  std::size_t scale(Int k, std::size_t a) const {
    Element x = element(a);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = mod(k % orders_[i] * x[i], orders_[i]);
    return index(x);
  }

  Int order(std::size_t a) const {
    Int k = 1;
    std::size_t cur = a;
    while (cur != 0) {
      cur = add(cur, a);
      ++k;
    }
    return k;
  }

  /// D q(x) mod 2D.
  Int q_scaled(std::size_t a) const { return q_[a]; }
  Rational q(std::size_t a) const { return Rational(q_[a], denom_); }

  /// D b(x, y) mod D, from polarization.
  Int b_scaled(std::size_t a, std::size_t b) const {
    const Int twice = mod(q_[add(a, b)] - q_[a] - q_[b], 2 * denom_);
    return twice / 2;
  }
  Rational b(std::size_t a, std::size_t c) const { return Rational(b_scaled(a, c), denom_); }

  /// Subgroup spanned by elements, as a sorted index list.
  std::vector<std::size_t> span(const std::vector<std::size_t>& gens) const {
    std::set<std::size_t> s{0};
    std::vector<std::size_t> frontier{0};
    while (!frontier.empty()) {
      std::vector<std::size_t> next;
      for (std::size_t x : frontier)
        for (std::size_t g : gens) {
          const std::size_t y = add(x, g);
          if (s.insert(y).second) next.push_back(y);
        }
      frontier = std::move(next);
    }
    return {s.begin(), s.end()};
  }

 private:
  IntVector orders_;
  std::size_t size_ = 1;
  Int denom_ = 1;
  std::vector<Int> q_;
};

/// Image of x under the matrix m (column j = image of generator j).
inline Element apply_matrix(const IntMatrix& m, const IntVector& orders, const Element& x) {
  Element y(orders.size(), 0);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    Int acc = 0;
    for (std::size_t j = 0; j < x.size(); ++j) acc = mod(acc + m[i][j] % orders[i] * x[j], orders[i]);
    y[i] = acc;
  }
  return y;
}

/// All form-preserving automorphisms, by backtracking over generator images.
inline std::vector<DiscAutomorphism> brute_aut_group(const FiniteQuadraticForm& f, Int cutoff = kDefaultCutoff) {
  const ElementTable t(f, cutoff);
  const std::size_t k = f.rank();
  std::vector<std::size_t> gens;
  for (std::size_t i = 0; i < k; ++i) gens.push_back(t.index(f.generator(i)));
  std::vector<Int> ord(t.size());
  for (std::size_t x = 0; x < t.size(); ++x) ord[x] = t.order(x);
  std::vector<DiscAutomorphism> out;
  std::vector<std::size_t> cur;
  std::function<void()> rec = [&]() {
    const std::size_t i = cur.size();
    if (i == k) {
      if (t.span(cur).size() != t.size()) return;
      IntMatrix m(k, IntVector(k, 0));
      for (std::size_t j = 0; j < k; ++j) {
        const Element y = t.element(cur[j]);
        for (std::size_t r = 0; r < k; ++r) m[r][j] = y[r];
      }
      out.emplace_back(std::move(m));
      return;
    }
    for (std::size_t y = 0; y < t.size(); ++y) {
      if (ord[y] != f.orders()[i] || t.q_scaled(y) != t.q_scaled(gens[i])) continue;
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j) ok = t.b_scaled(y, cur[j]) == t.b_scaled(gens[i], gens[j]);
      if (!ok) continue;
      cur.push_back(y);
      rec();
      cur.pop_back();
    }
  };
  rec();
  std::sort(out.begin(), out.end());
  return out;
}

/// Cyclic isotropic subgroups, each as its sorted element list.
inline std::vector<std::vector<Element>> brute_isotropic_cyclics(const FiniteQuadraticForm& f,
                                                                 Int cutoff = kDefaultCutoff) {
  const ElementTable t(f, cutoff);
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t x = 0; x < t.size(); ++x)
    if (t.q_scaled(x) == 0) seen.insert(t.span({x}));
  std::vector<std::vector<Element>> out;
  for (const auto& s : seen) {
    std::vector<Element> els;
    for (std::size_t i : s) els.push_back(t.element(i));
    std::sort(els.begin(), els.end());
    out.push_back(std::move(els));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Quotient K-perp/K built from explicit cosets, with independent generators chosen greedily.
inline FiniteQuadraticForm brute_subquotient(const FiniteQuadraticForm& f, const std::vector<Element>& k_gens,
                                             Int cutoff = kDefaultCutoff) {
  const ElementTable t(f, cutoff);
  std::vector<std::size_t> kg;
  for (const auto& g : k_gens) kg.push_back(t.index(g));
  const std::vector<std::size_t> kset = t.span(kg);
  for (std::size_t a : kset)
    if (t.q_scaled(a) != 0) throw std::invalid_argument("kernel is not isotropic");
  std::vector<std::size_t> perp;
  for (std::size_t x = 0; x < t.size(); ++x) {
    bool ok = true;
    for (std::size_t g : kg) ok = ok && t.b_scaled(x, g) == 0;
    if (ok) perp.push_back(x);
  }
  // coset key: smallest element of x + K
  auto key = [&](std::size_t x) {
    std::size_t best = x;
    for (std::size_t a : kset) best = std::min(best, t.add(x, a));
    return best;
  };
  std::map<std::size_t, std::size_t> coset_of;
  for (std::size_t x : perp) coset_of[x] = key(x);
  std::set<std::size_t> cosets;
  for (const auto& [x, c] : coset_of) cosets.insert(c);
  // H = span of chosen generators together with K
  std::vector<std::size_t> chosen;
  std::vector<Int> chosen_orders;
  auto span_with_k = [&]() {
    std::vector<std::size_t> g = kg;
    g.insert(g.end(), chosen.begin(), chosen.end());
    const auto s = t.span(g);
    return std::set<std::size_t>(s.begin(), s.end());
  };
  std::set<std::size_t> h = span_with_k();
  while (h.size() < perp.size()) {
    // coset of maximal order modulo H, then a representative of exactly that order modulo K
    Int best_order = 0;
    std::size_t best_x = 0;
    for (std::size_t x : perp) {
      Int o = 1;
      std::size_t cur = x;
      while (!h.count(cur)) {
        cur = t.add(cur, x);
        ++o;
      }
      if (o > best_order) {
        best_order = o;
        best_x = x;
      }
    }
    // representatives y = best_x + hh with hh in H and order of y modulo K equal to best_order
    std::optional<std::size_t> pick;
    for (std::size_t hh : h) {
      const std::size_t y = t.add(best_x, hh);
      Int o = 1;
      std::size_t cur = y;
      while (!std::binary_search(kset.begin(), kset.end(), cur)) {
        cur = t.add(cur, y);
        ++o;
      }
      if (o == best_order && (!pick || coset_of.at(y) < coset_of.at(*pick))) pick = y;
    }
    if (!pick) throw std::logic_error("no representative of maximal order");
    chosen.push_back(coset_of.at(*pick));
    chosen_orders.push_back(best_order);
    h = span_with_k();
  }
  std::vector<Rational> q;
  std::vector<std::vector<Rational>> b(chosen.size(), std::vector<Rational>(chosen.size()));
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    q.push_back(t.q(chosen[i]));
    for (std::size_t j = 0; j < chosen.size(); ++j) b[i][j] = t.b(chosen[i], chosen[j]);
  }
  return FiniteQuadraticForm(chosen_orders, q, b);
}

// ------------------------------------------------------------ Gauss sums

/// Elements of Q(zeta_N), N divisible by 8, as integer coefficient vectors of length N.
class Cyclotomic {
 public:
  explicit Cyclotomic(Int n) : n_(n), c_(static_cast<std::size_t>(n), BigInt(0)) {}

  static Cyclotomic zeta(Int n, Int k) {
    Cyclotomic z(n);
    z.c_[static_cast<std::size_t>(mod(k, n))] = 1;
    return z;
  }

  Int n() const { return n_; }
  void add_power(Int k, const BigInt& coeff) { c_[static_cast<std::size_t>(mod(k, n_))] += coeff; }

  Cyclotomic operator*(const Cyclotomic& o) const {
    Cyclotomic r(n_);
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == 0) continue;
      for (std::size_t j = 0; j < o.c_.size(); ++j)
        if (o.c_[j] != 0) r.c_[(i + j) % c_.size()] += c_[i] * o.c_[j];
    }
    return r;
  }

  Cyclotomic operator-(const Cyclotomic& o) const {
    Cyclotomic r = *this;
    for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] -= o.c_[i];
    return r;
  }

  Cyclotomic scaled(const BigInt& k) const {
    Cyclotomic r = *this;
    for (auto& v : r.c_) v *= k;
    return r;
  }

  /// True iff the element is zero in Q(zeta_N): reduce modulo the N-th cyclotomic polynomial.
  bool is_zero() const {
    std::vector<BigInt> p = c_;
    const std::vector<BigInt>& phi = cyclotomic_polynomial(n_);
    const std::size_t deg = phi.size() - 1;
    for (std::size_t i = p.size(); i-- > deg;) {
      if (p[i] == 0) continue;
      const BigInt f = p[i];  // phi is monic
      for (std::size_t j = 0; j <= deg; ++j) p[i - deg + j] -= f * phi[j];
    }
    return std::all_of(p.begin(), p.end(), [](const BigInt& v) { return v == 0; });
  }

  static const std::vector<BigInt>& cyclotomic_polynomial(Int n) {
    static thread_local std::map<Int, std::vector<BigInt>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    // x^n - 1 divided by phi_d for all proper divisors d
    std::vector<BigInt> p(static_cast<std::size_t>(n) + 1, BigInt(0));
    p[0] = -1;
    p[static_cast<std::size_t>(n)] = 1;
    for (Int d : divisors(n)) {
      if (d == n) continue;
      const auto& q = cyclotomic_polynomial(d);
      // exact division of p by monic q
      std::vector<BigInt> quot(p.size() - q.size() + 1, BigInt(0));
      for (std::size_t i = p.size() - 1; i + 1 >= q.size(); --i) {
        const std::size_t shift = i + 1 - q.size();
        const BigInt f = p[i];
        quot[shift] = f;
        if (f != 0)
          for (std::size_t j = 0; j < q.size(); ++j) p[shift + j] -= f * q[j];
        if (shift == 0) break;
      }
      p = std::move(quot);
    }
    return cache[n] = p;
  }

 private:
  Int n_;
  std::vector<BigInt> c_;
};

/// Positive square root of a positive integer inside Q(zeta_N), with all its odd prime
/// factors dividing N and 8 | N.
inline Cyclotomic positive_sqrt(Int m, Int n) {
  Cyclotomic r = Cyclotomic::zeta(n, 0);
  BigInt square_part = 1;
  Int rest = m;
  for (Int p : prime_divisors(m)) {
    int e = 0;
    while (rest % p == 0) {
      rest /= p;
      ++e;
    }
    for (int i = 0; i < e / 2; ++i) square_part *= p;
    if (e % 2 == 0) continue;
    if (p == 2) {
      // sqrt 2 = zeta_8 + zeta_8^{-1}
      Cyclotomic s(n);
      s.add_power(n / 8, 1);
      s.add_power(-n / 8, 1);
      r = r * s;
    } else {
      // g = sum (a/p) zeta_p^a; g = sqrt p for p = 1 mod 4, i sqrt p for p = 3 mod 4
      Cyclotomic g(n);
      for (Int a = 1; a < p; ++a) g.add_power(a * (n / p), legendre(a, p));
      if (p % 4 == 3) g = g * Cyclotomic::zeta(n, -n / 4);
      r = r * g;
    }
  }
  return r.scaled(square_part);
}

/// sigma mod 8 with sum_x exp(pi i q(x)) = sqrt|F| exp(2 pi i sigma / 8).
inline int gauss_sum_signature(const FiniteQuadraticForm& f, Int cutoff = kDefaultCutoff) {
  const ElementTable t(f, cutoff);
  const Int d = t.denominator();
  Int n = lcm(2 * d, 8);
  for (Int p : prime_divisors(static_cast<Int>(t.size()))) n = lcm(n, p == 2 ? 8 : p);
  // exp(pi i q) = zeta_{2D}^{Dq} = zeta_N^{(N / 2D) D q}
  Cyclotomic sum(n);
  for (std::size_t x = 0; x < t.size(); ++x) sum.add_power(t.q_scaled(x) * (n / (2 * d)), 1);
  const Cyclotomic root = positive_sqrt(static_cast<Int>(t.size()), n);
  for (int s = 0; s < 8; ++s)
    if ((sum - root * Cyclotomic::zeta(n, s * (n / 8))).is_zero()) return s;
  throw std::logic_error("Gauss sum is not of the expected shape");
}

// --------------------------------------------------------------- detector

struct BruteCandidate {
  Int a_square;
  Int n;
  Element kappa;
  bool operator<(const BruteCandidate& o) const {
    return std::tie(a_square, n, kappa) < std::tie(o.a_square, o.n, o.kappa);
  }
  bool operator==(const BruteCandidate& o) const {
    return a_square == o.a_square && n == o.n && kappa == o.kappa;
  }
};

/// Every (n, kappa) for fixed a^2, by scanning the element table.
inline std::vector<BruteCandidate> brute_kernel_candidates(const FiniteQuadraticForm& f, Int a_square,
                                                           Int cutoff = kDefaultCutoff) {
  const ElementTable t(f, cutoff);
  std::vector<BruteCandidate> out;
  for (Int n : {Int(1), Int(2)}) {
    if (a_square % n) continue;
    const Rational target = mod2(Rational(-n * n, a_square));
    for (std::size_t x = 0; x < t.size(); ++x)
      if (t.order(x) == a_square / n && t.q(x) == target) out.push_back({a_square, n, t.element(x)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Every (a^2, n, kappa) triple; a^2 ranges over even divisors of 2 exp(F), found by brute orders.
inline std::vector<BruteCandidate> brute_all_candidates(const FiniteQuadraticForm& f, Int cutoff = kDefaultCutoff) {
  const ElementTable t(f, cutoff);
  Int exp = 1;
  for (std::size_t x = 0; x < t.size(); ++x) exp = lcm(exp, t.order(x));
  std::vector<BruteCandidate> out;
  for (Int a2 = 2; a2 <= 2 * exp; a2 += 2) {
    if ((2 * exp) % a2) continue;
    auto part = brute_kernel_candidates(f, a2, cutoff);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

struct BruteCheck {
  bool kappa_ok = false;
  bool isotropic = false;
  bool cond2 = false;
  bool cond3 = false;
  bool genus = false;
  bool all() const { return kappa_ok && isotropic && cond2 && cond3 && genus; }
};

/// Re-validates a witness (a^2, n, kappa, phi) element by element on disc(S_h) + [1/a^2].
inline BruteCheck brute_check_witness(const FiniteQuadraticForm& disc_sh, int rank_s, Int a_square, Int n,
                                      const Element& kappa, const IntMatrix& phi, Int cutoff = 1 << 16) {
  BruteCheck out;
  const ElementTable ts(disc_sh, cutoff);
  const std::size_t ki = ts.index(kappa);
  out.kappa_ok = a_square % n == 0 && ts.order(ki) == a_square / n && ts.q(ki) == mod2(Rational(-n * n, a_square));
  // phi(kappa) = -kappa
  out.cond2 = ts.index(apply_matrix(phi, disc_sh.orders(), kappa)) == ts.neg(ki);
  const FiniteQuadraticForm amb = direct_sum(disc_sh, cyclic_form(1, a_square));
  const ElementTable t(amb, cutoff);
  Element theta = kappa;
  theta.push_back(n);
  const std::size_t th = t.index(theta);
  out.isotropic = t.q_scaled(th) == 0;
  if (!out.isotropic) return out;
  const auto kset = t.span({th});
  const std::size_t k = disc_sh.rank();
  out.cond3 = true;
  for (std::size_t x = 0; x < t.size() && out.cond3; ++x) {
    if (t.b_scaled(x, th) != 0) continue;
    const Element ex = t.element(x);
    Element xs(ex.begin(), ex.begin() + static_cast<std::ptrdiff_t>(k));
    Element img = apply_matrix(phi, disc_sh.orders(), xs);
    img.push_back(mod(-ex[k], a_square));
    const std::size_t diff = t.add(t.index(img), t.neg(x));
    out.cond3 = std::binary_search(kset.begin(), kset.end(), diff);
  }
  const FiniteQuadraticForm quot = brute_subquotient(amb, {theta}, cutoff);
  out.genus = embeds_into_big_L({2, rank_s, quot}).embeds;
  return out;
}

/// Dynkin-compatible involutions characterised through automorphisms of the component
/// blocks: blocks are permuted label-preservingly, A/D_odd/E6 blocks act by a common sign,
/// D_even blocks by any form automorphism, and h goes to +-h.
inline std::vector<DiscAutomorphism> brute_dynkin_involutions(const PolarizedForm& pf, Int cutoff = kDefaultCutoff) {
  const FiniteQuadraticForm& f = pf.form;
  const std::size_t k = f.rank();
  std::vector<DiscAutomorphism> out;
  for (const auto& a : brute_aut_group(f, cutoff)) {
    const IntMatrix& m = a.matrix();
    if (!a.is_involution(f)) continue;
    // h column
    bool ok = true;
    for (std::size_t r = 0; r < k && ok; ++r)
      if (r != pf.h_slot) ok = m[r][pf.h_slot] == 0;
    const Int hh = m[pf.h_slot][pf.h_slot];
    ok = ok && (hh == 1 || hh == mod(-1, pf.h_square));
    for (std::size_t c = 0; c < pf.components.size() && ok; ++c) {
      const auto& slots = pf.component_slots[c];
      if (slots.empty()) continue;
      // target block: the one containing the image of the first slot
      std::optional<std::size_t> target;
      for (std::size_t d = 0; d < pf.components.size(); ++d)
        for (std::size_t s : pf.component_slots[d])
          if (m[s][slots[0]] != 0) target = d;
      if (!target || pf.components[*target] != pf.components[c]) {
        ok = false;
        break;
      }
      const auto& tslots = pf.component_slots[*target];
      // block must map into the target block only
      for (std::size_t col : slots)
        for (std::size_t r = 0; r < k && ok; ++r)
          if (m[r][col] != 0 && std::find(tslots.begin(), tslots.end(), r) == tslots.end()) ok = false;
      if (!ok) break;
      const RootLabel& label = pf.components[c];
      const bool d_even = label.type == RootType::D && label.n % 2 == 0;
      if (d_even) continue;
      // common sign across the block's slots
      std::optional<Int> sign;
      for (std::size_t i = 0; i < slots.size() && ok; ++i)
        for (std::size_t j = 0; j < slots.size() && ok; ++j) {
          const Int v = m[tslots[i]][slots[j]];
          const Int o = f.orders()[tslots[i]];
          if (i != j) {
            ok = v == 0;
            continue;
          }
          Int s = v == 1 % o ? 1 : v == mod(-1, o) ? -1 : 0;
          if (s == 0) ok = false;
          else if (o == 2) continue;
          else if (!sign) sign = s;
          else ok = *sign == s;
        }
    }
    if (ok) out.push_back(a);
  }
  return out;
}

}  // namespace realstrata::oracle
