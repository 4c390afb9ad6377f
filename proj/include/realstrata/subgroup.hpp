#pragma once

#include <algorithm>
#include <vector>

#include "realstrata/abelian.hpp"
#include "realstrata/fqf.hpp"

namespace realstrata {

/// Subgroup of the group underlying a form, kept with its echelon basis.
class Subgroup {
 public:
  Subgroup(IntVector ambient_orders, std::vector<Element> generators)
      : generators_(std::move(generators)), echelon_(span(ambient_orders, generators_)) {}

  Subgroup(const FiniteQuadraticForm& f, std::vector<Element> generators)
      : Subgroup(f.orders(), std::move(generators)) {}

  explicit Subgroup(Echelon echelon) : echelon_(std::move(echelon)) {
    echelon_.finalize();
    generators_ = canonical_basis();
  }

  const std::vector<Element>& generators() const { return generators_; }
  const Echelon& echelon() const { return echelon_; }
  const IntVector& ambient_orders() const { return echelon_.orders(); }

  /// Nontrivial rows of the reduced echelon basis.
  std::vector<Element> canonical_basis() const {
    std::vector<Element> out;
    for (std::size_t j : echelon_.active_rows()) {
      Element r = echelon_.row(j);
      for (std::size_t c = 0; c < r.size(); ++c) r[c] = mod(r[c], ambient_orders()[c]);
      out.push_back(std::move(r));
    }
    return out;
  }

  /// Orders of the canonical rows in the quotient chain (o_j / d_j).
  IntVector chain_orders() const {
    IntVector out;
    for (std::size_t j : echelon_.active_rows()) out.push_back(ambient_orders()[j] / echelon_.pivot(j));
    return out;
  }

  Int order() const { return echelon_.subgroup_order(); }
  bool contains(const Element& x) const { return echelon_.contains(x); }
  bool is_trivial() const { return order() == 1; }

  bool operator==(const Subgroup& other) const { return echelon_ == other.echelon_; }

  /// All elements, in lexicographic order; for small subgroups only.
  std::vector<Element> elements(Int cap = 1 << 20) const {
    if (order() > cap) throw std::length_error("subgroup too large to enumerate");
    const auto basis = canonical_basis();
    const auto ords = chain_orders();
    const auto& amb = ambient_orders();
    std::vector<Element> out{Element(amb.size(), 0)};
    for (std::size_t i = 0; i < basis.size(); ++i) {
      std::vector<Element> next;
      next.reserve(out.size() * static_cast<std::size_t>(ords[i]));
      for (const auto& e : out)
        for (Int k = 0; k < ords[i]; ++k) {
          Element x(e.size());
          for (std::size_t c = 0; c < e.size(); ++c) x[c] = mod(e[c] + k * basis[i][c], amb[c]);
          next.push_back(std::move(x));
        }
      out = std::move(next);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<Element> generators_;
  Echelon echelon_;
};

/// Same subgroup, presented by its canonical basis; idempotent.
inline Subgroup smith_canonicalize(const Subgroup& h) {
  return Subgroup(h.ambient_orders(), h.canonical_basis());
}

inline Subgroup whole_group(const FiniteQuadraticForm& f) {
  std::vector<Element> gens;
  for (std::size_t i = 0; i < f.rank(); ++i) gens.push_back(f.generator(i));
  return Subgroup(f, gens);
}

inline Subgroup orthogonal_complement(const FiniteQuadraticForm& f, const Subgroup& h) {
  return Subgroup(f.annihilator(h.canonical_basis()));
}

/// Independent generators of a subgroup, with their orders.
struct IndependentBasis {
  std::vector<Element> generators;
  IntVector orders;
};

inline IndependentBasis independent_basis(const Subgroup& h) {
  QuotientPresentation pres(h.echelon(), {});
  return {pres.generators(), pres.orders()};
}

}  // namespace realstrata
