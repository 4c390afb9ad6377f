#pragma once

// p-adic determinant classes and the existence criterion for primitive
// embeddings into the K3 lattice 2E8 + 3U (signature (3, 19), rank 22).

#include <optional>
#include <string>
#include <vector>

#include "realstrata/candidate.hpp"
#include "realstrata/lattices.hpp"

namespace realstrata {

struct SquareClass {
  Int p = 0;
  int valuation = 0;  // exponent of p in |F_[p]|
  int unit = 1;       // odd p: Legendre symbol; p = 2: residue mod 8
  bool odd_grading = false;  // p = 2 and the 2-part is odd: only unit mod 4 is meaningful

  /// Equality as square classes, coarsening when either side has odd grading.
  bool same_class(const SquareClass& o) const {
    if (p != o.p) return false;
    if (p != 2) return unit == o.unit;
    if (odd_grading || o.odd_grading) return unit % 4 == o.unit % 4;
    return unit == o.unit;
  }

  SquareClass negated() const {
    SquareClass s = *this;
    if (p == 2) s.unit = static_cast<int>(mod(-unit, 8));
    else s.unit = unit * legendre(-1, p);
    return s;
  }

  std::string describe() const {
    std::string s = "p=" + std::to_string(p) + " unit=";
    if (p == 2) s += std::to_string(unit) + (odd_grading ? " (odd)" : " (even)");
    else s += unit == 1 ? "residue" : "nonresidue";
    return s;
  }
};

/// Unit u with det Gram(F_[p]) = u / |F_[p]|, as an exact rational.
inline Rational det_unit(const FiniteQuadraticForm& f, Int p) {
  const PrimaryPart part = p_part(f, p);
  const FiniteQuadraticForm& fp = part.form;
  const std::size_t k = fp.rank();
  if (k == 0) return 1;
  std::vector<std::vector<Rational>> a(k, std::vector<Rational>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) a[i][j] = i == j ? fp.q_values()[i] : fp.b(i, j);
  Rational det = 1;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t r = c;
    while (r < k && a[r][c] == 0) ++r;
    if (r == k) {
      det = 0;
      break;
    }
    if (r != c) {
      std::swap(a[r], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t i = c + 1; i < k; ++i) {
      if (a[i][c] == 0) continue;
      const Rational m = a[i][c] / a[c][c];
      for (std::size_t j = c; j < k; ++j) a[i][j] -= m * a[c][j];
    }
  }
  const Rational u = det * fp.order();
  if (u == 0 || num(u) % p == 0 || den(u) % p == 0) throw std::logic_error("det_p is not a p-adic unit");
  return u;
}

/// Square class of a p-adic unit given as a rational.
inline int unit_residue(const Rational& u, Int p) {
  const BigInt modulus = p == 2 ? 8 : p;
  BigInt nr = num(u) % modulus, dr = den(u) % modulus;
  if (nr < 0) nr += modulus;
  if (dr < 0) dr += modulus;
  const Int value = mod(to_int(nr) * to_int(dr), to_int(modulus));  // d^{-1} ~ d mod squares
  return p == 2 ? static_cast<int>(value) : legendre(value, p);
}

inline SquareClass det_p(const FiniteQuadraticForm& f, Int p) {
  SquareClass s;
  s.p = p;
  s.valuation = valuation(p_part(f, p).form.order(), p);
  s.unit = unit_residue(det_unit(f, p), p);
  if (p == 2) s.odd_grading = !is_even_2part(f);
  return s;
}

// ------------------------------------------------------------ embeddings

struct EmbeddingProfile {
  int sigma_plus = 0;
  int sigma_minus = 0;
  FiniteQuadraticForm form;

  int rank() const { return sigma_plus + sigma_minus; }
};

enum class EmbedClause { None, Signature, Length, OddPrime, Two };

struct EmbedResult {
  bool embeds = true;
  EmbedClause failed = EmbedClause::None;
  Int prime = 0;

  std::string reason() const {
    switch (failed) {
      case EmbedClause::None: return "ok";
      case EmbedClause::Signature: return "signature";
      case EmbedClause::Length: return "length";
      case EmbedClause::OddPrime: return "determinant at p=" + std::to_string(prime);
      case EmbedClause::Two: return "determinant at p=2";
    }
    return "?";
  }
};

inline constexpr int kK3Rank = 22;
inline constexpr int kK3SigmaPlus = 3;
inline constexpr int kK3SigmaMinus = 19;

/// Outcome of the determinant clause at a single prime (true when inapplicable).
inline bool embedding_clause_at(const EmbeddingProfile& pr, Int p) {
  const FiniteQuadraticForm& f = pr.form;
  const int budget = kK3Rank - pr.rank();
  if (length_p(f, p) != budget) return true;
  const Rational u = det_unit(f, p);
  const Int rest = f.order() / p_part(f, p).form.order();
  const Rational val = u * rest;
  if (p != 2) {
    const int sign = (pr.sigma_plus - 1) % 2 == 0 ? 1 : -1;
    return unit_residue(val, p) == legendre(sign, p);
  }
  if (!is_even_2part(f)) return true;
  const int r = unit_residue(val, 2);
  return r == 1 || r == 7;
}

inline EmbedResult embeds_into_big_L(const EmbeddingProfile& pr) {
  EmbedResult out;
  auto fail = [&](EmbedClause c, Int p = 0) {
    out.embeds = false;
    out.failed = c;
    out.prime = p;
    return out;
  };
  if (pr.sigma_plus > kK3SigmaPlus || pr.sigma_minus > kK3SigmaMinus) return fail(EmbedClause::Signature);
  if (length(pr.form) > kK3Rank - pr.rank()) return fail(EmbedClause::Length);
  for (Int p : primes_of(pr.form)) {
    if (p == 2) continue;
    if (!embedding_clause_at(pr, p)) return fail(EmbedClause::OddPrime, p);
  }
  if (pr.form.order() % 2 == 0 && !embedding_clause_at(pr, 2)) return fail(EmbedClause::Two, 2);
  return out;
}

/// disc(M~_a) = K-perp/K for the gluing kernel of a candidate; signature (2, rank S).
inline EmbeddingProfile glued_profile(const PolarizedForm& pf, const KernelCandidate& cand) {
  Gluing g = make_gluing(pf.form, cand);
  return {2, pf.rank_S(), g.quotient.form()};
}

inline EmbedResult genus_tilde_check(const PolarizedForm& pf, const KernelCandidate& cand) {
  return embeds_into_big_L(glued_profile(pf, cand));
}

inline bool genus_tilde_nonempty(const PolarizedForm& pf, const KernelCandidate& cand) {
  return genus_tilde_check(pf, cand).embeds;
}

/// Determinant clauses that hold automatically for M~_a at the prime p, if the
/// shortcut applies: odd p dividing a^2, or p = 2 with n = 1 and unchanged 2-parity.
inline std::optional<bool> coron_niku_shortcut(const PolarizedForm& pf, const KernelCandidate& cand, Int p) {
  if (p != 2) {
    if (cand.a_square % p == 0) return true;
    return std::nullopt;
  }
  if (cand.n != 1) return std::nullopt;
  const Gluing g = make_gluing(pf.form, cand);
  if (is_even_2part(g.quotient.form()) == is_even_2part(pf.form)) return true;
  return std::nullopt;
}

}  // namespace realstrata
