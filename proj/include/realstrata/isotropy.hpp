#pragma once

// Isotropic subgroups, subquotients K-perp/K, and the splitting of a cyclic
// subgroup of a 2-primary form into elementary blocks.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "realstrata/fqf.hpp"
#include "realstrata/subgroup.hpp"

namespace realstrata {

inline bool is_isotropic(const FiniteQuadraticForm& f, const Subgroup& h) {
  const auto basis = h.canonical_basis();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (f.q_scaled(basis[i]) != 0) return false;
    for (std::size_t j = i + 1; j < basis.size(); ++j)
      if (f.b_scaled(basis[i], basis[j]) != 0) return false;
  }
  return true;
}

class IsotropicKernel {
 public:
  IsotropicKernel(FiniteQuadraticForm ambient, Subgroup subgroup)
      : ambient_(std::move(ambient)), subgroup_(std::move(subgroup)) {
    if (!is_isotropic(ambient_, subgroup_)) throw std::invalid_argument("kernel is not isotropic");
  }
  const FiniteQuadraticForm& ambient() const { return ambient_; }
  const Subgroup& subgroup() const { return subgroup_; }

 private:
  FiniteQuadraticForm ambient_;
  Subgroup subgroup_;
};

/// K-perp / K with its projection.
class Subquotient {
 public:
  Subquotient(const FiniteQuadraticForm& f, const Subgroup& k)
      : perp_(orthogonal_complement(f, k)), presentation_(perp_.echelon(), k.canonical_basis()) {
    if (!is_isotropic(f, k)) throw std::invalid_argument("kernel is not isotropic");
    const bool small = k.order() <= (1 << 16);
    const auto k_elements = small ? k.elements() : std::vector<Element>{};
    for (const auto& g : presentation_.generators()) {
      Element best = g;
      for (const auto& x : k_elements) {
        Element c = f.add(g, x);
        if (c < best) best = std::move(c);
      }
      representatives_.push_back(std::move(best));
    }
    // orders of the representatives in F may exceed their orders in the quotient
    std::vector<std::vector<Rational>> gram(representatives_.size(), std::vector<Rational>(representatives_.size()));
    std::vector<Rational> q;
    for (std::size_t i = 0; i < representatives_.size(); ++i) {
      q.push_back(f.eval_q(representatives_[i]));
      for (std::size_t j = 0; j < representatives_.size(); ++j)
        gram[i][j] = f.eval_b(representatives_[i], representatives_[j]);
    }
    form_ = FiniteQuadraticForm(presentation_.orders(), q, gram);
  }

  const FiniteQuadraticForm& form() const { return form_; }
  const Subgroup& perp() const { return perp_; }
  const std::vector<Element>& representatives() const { return representatives_; }

  /// Coordinates of the class of x in the quotient generators (x must lie in K-perp).
  Element project(const Element& x) const { return presentation_.project(x); }

 private:
  Subgroup perp_;
  QuotientPresentation presentation_;
  std::vector<Element> representatives_;
  FiniteQuadraticForm form_;
};

inline Subquotient subquotient(const FiniteQuadraticForm& f, const Subgroup& k) { return Subquotient(f, k); }
inline Subquotient subquotient(const IsotropicKernel& k) { return Subquotient(k.ambient(), k.subgroup()); }

/// Order of a value D*b (mod D) in Q/Z.
inline Int pairing_order(Int b_scaled, Int denominator) { return denominator / gcd(b_scaled, denominator); }

inline bool is_power_of_two(Int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Int n) {
  if (!is_power_of_two(n)) throw std::invalid_argument("not a power of two");
  int k = 0;
  while ((Int(1) << k) < n) ++k;
  return k;
}

struct ElementaryBlock {
  int exponent;  // block lives on (Z/2^exponent)^1 or ^2
  std::vector<Element> generators;
};

struct HomogeneousComponent {
  int exponent;
  std::vector<Element> generators;
  FiniteQuadraticForm form;
};

struct HomogeneousDecomposition {
  std::vector<ElementaryBlock> blocks;           // in the order they were split off
  std::vector<HomogeneousComponent> components;  // ascending exponent
};

/// Orthogonal splitting of a nondegenerate 2-primary form into homogeneous parts.
inline HomogeneousDecomposition homogeneous_decomposition(const FiniteQuadraticForm& f2) {
  for (Int o : f2.orders())
    if (!is_power_of_two(o)) throw std::invalid_argument("homogeneous decomposition needs a 2-group");
  HomogeneousDecomposition out;
  std::vector<Element> found;
  IndependentBasis w = independent_basis(whole_group(f2));
  const Int d = f2.denominator();
  while (!w.generators.empty()) {
    Int e = 1;
    for (Int o : w.orders) e = std::max(e, o);
    std::vector<std::size_t> top;
    for (std::size_t i = 0; i < w.orders.size(); ++i)
      if (w.orders[i] == e) top.push_back(i);
    std::optional<ElementaryBlock> block;
    for (std::size_t i : top) {
      const auto& g = w.generators[i];
      if (pairing_order(f2.b_scaled(g, g), d) == e) {
        block = ElementaryBlock{log2_exact(e), {g}};
        break;
      }
    }
    for (std::size_t a = 0; !block && a < top.size(); ++a)
      for (std::size_t b = a + 1; b < top.size(); ++b) {
        const auto& x = w.generators[top[a]];
        const auto& y = w.generators[top[b]];
        if (pairing_order(f2.b_scaled(x, y), d) == e) {
          block = ElementaryBlock{log2_exact(e), {x, y}};
          break;
        }
      }
    if (!block) throw std::invalid_argument("form is degenerate; no orthogonal block splits off");
    found.insert(found.end(), block->generators.begin(), block->generators.end());
    out.blocks.push_back(std::move(*block));
    w = independent_basis(orthogonal_complement(f2, Subgroup(f2, found)));
  }
  std::vector<int> exps;
  for (const auto& b : out.blocks) exps.push_back(b.exponent);
  std::sort(exps.begin(), exps.end());
  exps.erase(std::unique(exps.begin(), exps.end()), exps.end());
  for (int ex : exps) {
    HomogeneousComponent c{ex, {}, {}};
    for (const auto& b : out.blocks)
      if (b.exponent == ex) c.generators.insert(c.generators.end(), b.generators.begin(), b.generators.end());
    c.form = restrict_form(f2, c.generators);
    out.components.push_back(std::move(c));
  }
  return out;
}

struct SplitBlock {
  int m;
  int r;
  Element u;
  std::optional<Element> v;
  Int mu;                 // 2^(m+r) q(u) mod 2^(m+r+1)
  std::optional<Int> nu;  // 2^(m+r) q(v) mod 2^(m+r+1)
  bool cyclic() const { return !v.has_value(); }
};

struct SplitDecomposition {
  FiniteQuadraticForm base;
  std::vector<Element> base_generators;
  std::vector<SplitBlock> blocks;
  std::vector<Element> kappa_parts;
};

namespace detail {

inline int two_valuation(Int a) { return valuation(a, 2); }

// lexicographically first element x of the span of `basis` (independent, orders `ords`)
// whose coordinate vector satisfies pred
template <class Pred>
std::optional<Element> first_in_span(const FiniteQuadraticForm& f, const std::vector<Element>& basis,
                                     const IntVector& ords, Pred pred) {
  IntVector coeff(basis.size(), 0);
  for (;;) {
    Element x = f.zero();
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (coeff[i]) x = f.add(x, f.scale(coeff[i], basis[i]));
    if (pred(x)) return x;
    std::size_t i = basis.size();
    while (i > 0) {
      --i;
      if (++coeff[i] < ords[i]) break;
      coeff[i] = 0;
      if (i == 0) return std::nullopt;
    }
    if (basis.empty()) return std::nullopt;
  }
}

}  // namespace detail

/// Splits the cyclic subgroup generated by kappa off a 2-primary form.
inline SplitDecomposition split_off_cyclic(const FiniteQuadraticForm& f2, const Element& kappa) {
  if (f2.element_order(kappa) == 1) throw std::invalid_argument("split_off_cyclic needs kappa != 0");
  const HomogeneousDecomposition hd = homogeneous_decomposition(f2);
  std::vector<Element> all;
  std::vector<int> comp_exp;
  IntVector ords;
  for (const auto& c : hd.components)
    for (const auto& g : c.generators) {
      all.push_back(g);
      comp_exp.push_back(c.exponent);
      ords.push_back(Int(1) << c.exponent);
    }
  Echelon e = span(f2.orders(), all, true);
  auto coords_opt = e.solve(kappa);
  if (!coords_opt) throw std::logic_error("kappa outside the decomposed group");
  IntVector c = *coords_opt;
  auto element_of = [&](const IntVector& coeff) {
    Element x = f2.zero();
    for (std::size_t t = 0; t < all.size(); ++t)
      if (coeff[t]) x = f2.add(x, f2.scale(coeff[t], all[t]));
    return x;
  };
  auto comp_order = [&](const IntVector& coeff, int ex) {
    Int ord = 1;
    for (std::size_t t = 0; t < all.size(); ++t)
      if (comp_exp[t] == ex) ord = std::max(ord, ords[t] / gcd(ords[t], mod(coeff[t], ords[t])));
    return ord;
  };
  SplitDecomposition out;
  const Int d = f2.denominator();
  std::vector<Element> block_gens;
  for (;;) {
    bool nonzero = false;
    int r = 1 << 20;
    for (std::size_t t = 0; t < all.size(); ++t)
      if (mod(c[t], ords[t]) != 0) {
        nonzero = true;
        r = std::min(r, detail::two_valuation(mod(c[t], ords[t])));
      }
    if (!nonzero) break;
    int n = -1;
    for (const auto& comp : hd.components) {
      const Int ord = comp_order(c, comp.exponent);
      if (ord > 1 && comp.exponent - r >= 0 && ord == (Int(1) << (comp.exponent - r))) n = std::max(n, comp.exponent);
    }
    if (n < 0) throw std::logic_error("splitting failed to locate the leading component");
    const int m = n - r;
    IntVector u_coeff(all.size(), 0), kappa_coeff(all.size(), 0);
    for (const auto& comp : hd.components) {
      const Int ord = comp_order(c, comp.exponent);
      if (ord == 1 || ord > (Int(1) << m)) continue;
      for (std::size_t t = 0; t < all.size(); ++t)
        if (comp_exp[t] == comp.exponent) {
          const Int ct = mod(c[t], ords[t]);
          u_coeff[t] = ct >> r;
          kappa_coeff[t] = ct;
          c[t] = 0;
        }
    }
    SplitBlock blk{m, r, element_of(u_coeff), std::nullopt, 0, std::nullopt};
    const Int two_n = Int(1) << n;
    auto scaled_square = [&](const Element& x) {
      // 2^n q(x) as an integer mod 2^(n+1)
      const Int qs = f2.q_scaled(x);
      const Int numer = checked_mul(qs, two_n);
      if (numer % d != 0) throw std::logic_error("unexpected square denominator in splitting");
      return mod(numer / d, 2 * two_n);
    };
    blk.mu = scaled_square(blk.u);
    if (blk.mu % 2 == 0) {
      std::vector<Element> mn_basis;
      IntVector mn_ords;
      for (const auto& comp : hd.components)
        if (comp.exponent == n) {
          mn_basis = comp.generators;
          mn_ords.assign(mn_basis.size(), two_n);
        }
      const Int target = d / two_n;
      auto v = detail::first_in_span(f2, mn_basis, mn_ords,
                                     [&](const Element& x) { return f2.b_scaled(blk.u, x) == target; });
      if (!v) throw std::logic_error("no partner vector for an even block");
      blk.v = *v;
      blk.nu = scaled_square(*v);
    }
    block_gens.push_back(blk.u);
    if (blk.v) block_gens.push_back(*blk.v);
    out.kappa_parts.push_back(element_of(kappa_coeff));
    out.blocks.push_back(std::move(blk));
  }
  IndependentBasis base = independent_basis(orthogonal_complement(f2, Subgroup(f2, block_gens)));
  out.base_generators = base.generators;
  out.base = restrict_form(f2, base.generators);
  return out;
}

/// Shapes of the 2-primary gluing for n = 2 (kappa of order 2^m, q(kappa) = odd/2^(m-1)).
enum class GluingCase {
  Trivial,              // kappa = 0
  SinglePair,           // one even block at level m, kappa = u1
  CyclicThenPair,       // odd block at m-1, even block at m+1, kappa = u1 + 2 u2
  PairThenCyclic,       // even block at m-1, odd block at m+1, kappa = u1 + 2 u2
  CyclicThenDeepCyclic, // odd block at m-1, odd block at m+r2, r2 > 1
  CyclicThenDeepPair,   // odd block at m-1, even block at m+r2, r2 > 1
  LowCyclicThenCyclic,  // odd block at n <= m-2, odd block at m+1
  LowPairThenCyclic,    // even block at n <= m-2, odd block at m+1
  Doubled,              // r1 = 1: odd block at m+1, kappa = 2 u1
};

inline std::string to_string(GluingCase c) {
  switch (c) {
    case GluingCase::Trivial: return "trivial";
    case GluingCase::SinglePair: return "single_pair";
    case GluingCase::CyclicThenPair: return "cyclic_then_pair";
    case GluingCase::PairThenCyclic: return "pair_then_cyclic";
    case GluingCase::CyclicThenDeepCyclic: return "cyclic_then_deep_cyclic";
    case GluingCase::CyclicThenDeepPair: return "cyclic_then_deep_pair";
    case GluingCase::LowCyclicThenCyclic: return "low_cyclic_then_cyclic";
    case GluingCase::LowPairThenCyclic: return "low_pair_then_cyclic";
    case GluingCase::Doubled: return "doubled";
  }
  return "unknown";
}

/// True iff ord(kappa) = 2^m and q(kappa) = xi / 2^(m-1) with xi odd.
inline bool satisfies_square_condition(const FiniteQuadraticForm& f2, const Element& kappa, int m) {
  if (m < 1 || f2.element_order(kappa) != (Int(1) << m)) return false;
  const Int numer = checked_mul(f2.q_scaled(kappa), Int(1) << (m - 1));
  if (numer % f2.denominator() != 0) return false;
  return (numer / f2.denominator()) % 2 != 0;
}

inline GluingCase classify_gluing_case(const FiniteQuadraticForm& f2, const Element& kappa, int m) {
  if (f2.element_order(kappa) == 1) return GluingCase::Trivial;
  if (!satisfies_square_condition(f2, kappa, m))
    throw std::invalid_argument("kappa violates ord = 2^m, q = odd/2^(m-1)");
  const SplitDecomposition sd = split_off_cyclic(f2, kappa);
  const auto& b = sd.blocks;
  auto fail = [] { return std::logic_error("splitting has a shape outside the known gluing cases"); };
  if (b.empty()) throw fail();
  if (b[0].r == 1) {
    if (b.size() == 1 && b[0].m == m && b[0].cyclic()) return GluingCase::Doubled;
    throw fail();
  }
  if (b[0].r != 0) throw fail();
  if (b.size() == 1) {
    if (b[0].m == m && !b[0].cyclic()) return GluingCase::SinglePair;
    throw fail();
  }
  if (b.size() != 2 || b[1].m != m) throw fail();
  if (b[0].m == m - 1) {
    if (b[1].r == 1) {
      if (b[0].cyclic() && !b[1].cyclic()) return GluingCase::CyclicThenPair;
      if (!b[0].cyclic() && b[1].cyclic()) return GluingCase::PairThenCyclic;
      throw fail();
    }
    if (!b[0].cyclic()) throw fail();
    return b[1].cyclic() ? GluingCase::CyclicThenDeepCyclic : GluingCase::CyclicThenDeepPair;
  }
  if (b[0].m <= m - 2 && b[1].r == 1 && b[1].cyclic())
    return b[0].cyclic() ? GluingCase::LowCyclicThenCyclic : GluingCase::LowPairThenCyclic;
  throw fail();
}

}  // namespace realstrata
