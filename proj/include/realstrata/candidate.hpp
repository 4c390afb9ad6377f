#pragma once

#include <stdexcept>
#include <vector>

#include "realstrata/isotropy.hpp"
#include "realstrata/lattices.hpp"

namespace realstrata {

/// disc(S_h) + [1/a^2], the last generator being alpha.
inline FiniteQuadraticForm glued_ambient(const FiniteQuadraticForm& disc_sh, Int a_square) {
  return direct_sum(disc_sh, cyclic_form(1, a_square));
}

/// (a^2, n, kappa) with theta = kappa + n*alpha.
struct KernelCandidate {
  Int a_square = 0;
  Int n = 0;
  Element kappa;

  Element theta(const FiniteQuadraticForm& disc_sh) const {
    Element t = disc_sh.reduce(kappa);
    t.push_back(mod(n, a_square));
    return t;
  }

  /// Order and square conditions on kappa.
  bool valid(const FiniteQuadraticForm& disc_sh) const {
    if (a_square < 2 || a_square % 2 != 0 || (n != 1 && n != 2) || a_square % n != 0) return false;
    if (kappa.size() != disc_sh.rank()) return false;
    if (disc_sh.element_order(kappa) != a_square / n) return false;
    return mod2(disc_sh.eval_q(kappa) + Rational(n * n, a_square)) == 0;
  }

  bool operator==(const KernelCandidate& o) const {
    return a_square == o.a_square && n == o.n && kappa == o.kappa;
  }
  bool operator<(const KernelCandidate& o) const {
    if (a_square != o.a_square) return a_square < o.a_square;
    if (n != o.n) return n < o.n;
    return kappa < o.kappa;
  }
};

/// The gluing kernel K = <theta> inside disc(S_h) + A and its subquotient.
struct Gluing {
  FiniteQuadraticForm ambient;
  Subgroup kernel;
  Subquotient quotient;
};

inline Gluing make_gluing(const FiniteQuadraticForm& disc_sh, const KernelCandidate& cand) {
  if (!cand.valid(disc_sh)) throw std::invalid_argument("kernel candidate violates the order/square conditions");
  FiniteQuadraticForm amb = glued_ambient(disc_sh, cand.a_square);
  Subgroup k(amb, {cand.theta(disc_sh)});
  Subquotient sq(amb, k);
  return {std::move(amb), std::move(k), std::move(sq)};
}

}  // namespace realstrata
