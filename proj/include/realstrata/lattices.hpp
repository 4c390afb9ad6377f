#pragma once

// ADE root lattices, the polarized discriminant disc(S + Zh), induced Dynkin
// symmetries, and positive definite binary lattices.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "realstrata/automorphism.hpp"
#include "realstrata/fqf.hpp"
#include "realstrata/subgroup.hpp"

namespace realstrata {

// ---------------------------------------------------------------- root specs

enum class RootType { E = 0, D = 1, A = 2 };

struct RootLabel {
  RootType type;
  int n;

  std::string name() const {
    const char c = type == RootType::A ? 'A' : type == RootType::D ? 'D' : 'E';
    return std::string(1, c) + std::to_string(n);
  }
  int rank() const { return n; }

  // canonical order: E before D before A, larger rank first
  bool operator<(const RootLabel& o) const {
    if (type != o.type) return static_cast<int>(type) < static_cast<int>(o.type);
    return n > o.n;
  }
  bool operator==(const RootLabel& o) const { return type == o.type && n == o.n; }
  bool operator!=(const RootLabel& o) const { return !(*this == o); }
};

class spec_parse_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RootSpec {
 public:
  RootSpec() = default;

  static RootSpec parse(std::string_view text) {
    std::string s;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    RootSpec spec;
    if (s.empty()) return spec;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      std::size_t next = s.find('+', pos);
      if (next == std::string::npos) next = s.size();
      const std::string token = s.substr(pos, next - pos);
      spec.add(parse_term(token));
      if (next == s.size()) break;
      pos = next + 1;
      if (pos == s.size()) throw spec_parse_error("empty term after '+' in spec '" + std::string(text) + "'");
    }
    return spec;
  }

  void add(std::pair<RootLabel, int> term) {
    for (auto& t : terms_)
      if (t.first == term.first) {
        t.second += term.second;
        return;
      }
    terms_.push_back(term);
    std::sort(terms_.begin(), terms_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  const std::vector<std::pair<RootLabel, int>>& terms() const { return terms_; }

  std::vector<RootLabel> components() const {
    std::vector<RootLabel> out;
    for (const auto& [label, count] : terms_)
      for (int i = 0; i < count; ++i) out.push_back(label);
    return out;
  }

  int rank() const {
    int r = 0;
    for (const auto& [label, count] : terms_) r += label.rank() * count;
    return r;
  }

  std::string canonical() const {
    std::string out;
    for (const auto& [label, count] : terms_) {
      if (!out.empty()) out += "+";
      if (count > 1) out += std::to_string(count) + "*";
      out += label.name();
    }
    return out;
  }

  bool operator==(const RootSpec& o) const { return canonical() == o.canonical(); }

 private:
  static std::pair<RootLabel, int> parse_term(const std::string& token) {
    auto bad = [&](const std::string& why) { return spec_parse_error("bad term '" + token + "': " + why); };
    if (token.empty()) throw bad("empty term");
    std::size_t i = 0;
    int count = 1;
    const auto star = token.find('*');
    if (star != std::string::npos) {
      const std::string c = token.substr(0, star);
      if (c.empty() || !std::all_of(c.begin(), c.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        throw bad("multiplicity must be a positive integer");
      if (c.size() > 3) throw bad("multiplicity too large");
      count = std::stoi(c);
      if (count < 1) throw bad("multiplicity must be positive");
      i = star + 1;
    }
    if (i >= token.size()) throw bad("missing root type");
    const char t = static_cast<char>(std::toupper(static_cast<unsigned char>(token[i])));
    RootType type;
    if (t == 'A') type = RootType::A;
    else if (t == 'D') type = RootType::D;
    else if (t == 'E') type = RootType::E;
    else throw bad("root type must be A, D or E");
    const std::string digits = token.substr(i + 1);
    if (digits.empty() || digits.size() > 3 ||
        !std::all_of(digits.begin(), digits.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
      throw bad("rank must be a number");
    const int n = std::stoi(digits);
    if (type == RootType::A && n < 1) throw bad("A_n needs n >= 1");
    if (type == RootType::D && n < 4) throw bad("D_n needs n >= 4");
    if (type == RootType::E && (n < 6 || n > 8)) throw bad("E_n needs n in 6..8");
    return {RootLabel{type, n}, count};
  }

  std::vector<std::pair<RootLabel, int>> terms_;
};

// ------------------------------------------------------------ linear algebra

using RationalMatrix = std::vector<std::vector<Rational>>;

inline RationalMatrix rational_inverse(const IntMatrix& g) {
  const std::size_t n = g.size();
  RationalMatrix a(n, std::vector<Rational>(2 * n, Rational(0)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = g[i][j];
    a[i][n + i] = 1;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) throw std::invalid_argument("Gram matrix is degenerate");
    std::swap(a[p], a[c]);
    const Rational inv = 1 / a[c][c];
    for (auto& v : a[c]) v *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      const Rational f = a[r][c];
      for (std::size_t k = 0; k < 2 * n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  RationalMatrix out(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i][j] = a[i][n + j];
  return out;
}

inline Rational rational_determinant(const IntMatrix& g) {
  const std::size_t n = g.size();
  RationalMatrix a(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = g[i][j];
  Rational det = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) return 0;
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      if (a[r][c] == 0) continue;
      const Rational f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

/// Discriminant form of an even nondegenerate lattice with Gram g, presented by
/// the Smith normal form of g.  Elements of the dual are G^{-1} y for y in Z^n.
class LatticeDiscriminant {
 public:
  explicit LatticeDiscriminant(IntMatrix g) : g_(std::move(g)), g_inv_(rational_inverse(g_)) {
    const std::size_t n = g_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (g_[i].size() != n) throw std::invalid_argument("Gram matrix is not square");
      if (mod(g_[i][i], 2) != 0) throw std::invalid_argument("lattice is not even");
      for (std::size_t j = 0; j < n; ++j)
        if (g_[i][j] != g_[j][i]) throw std::invalid_argument("Gram matrix is not symmetric");
    }
    SmithForm snf = smith_normal_form(g_, n);
    q_ = snf.q;
    std::vector<Rational> qv;
    std::vector<Element> ys;
    for (std::size_t i = 0; i < n; ++i) {
      if (snf.diagonal[i] == 0) throw std::invalid_argument("Gram matrix is degenerate");
      if (snf.diagonal[i] == 1) continue;
      kept_.push_back(i);
      orders_.push_back(snf.diagonal[i]);
      ys.push_back(snf.q_inverse[i]);
    }
    std::vector<std::vector<Rational>> gram(ys.size(), std::vector<Rational>(ys.size()));
    for (std::size_t a = 0; a < ys.size(); ++a) {
      qv.push_back(pair(ys[a], ys[a]));
      for (std::size_t b = 0; b < ys.size(); ++b) gram[a][b] = pair(ys[a], ys[b]);
    }
    form_ = FiniteQuadraticForm(orders_, qv, gram);
    generators_y_ = ys;
  }

  const FiniteQuadraticForm& form() const { return form_; }
  const IntMatrix& gram() const { return g_; }
  const RationalMatrix& gram_inverse() const { return g_inv_; }
  const std::vector<Element>& generators_y() const { return generators_y_; }

  /// y^T G^{-1} y'.
  Rational pair(const IntVector& y, const IntVector& y2) const {
    Rational acc = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      for (std::size_t j = 0; j < y2.size(); ++j)
        if (y[i] && y2[j]) acc += g_inv_[i][j] * y[i] * y2[j];
    return acc;
  }

  /// Class of the dual vector G^{-1} y in generator coordinates.
  Element project(const IntVector& y) const {
    Element z(kept_.size(), 0);
    for (std::size_t t = 0; t < kept_.size(); ++t) {
      Int acc = 0;
      for (std::size_t l = 0; l < y.size(); ++l)
        acc = mod(checked_add(acc, checked_mul(mod(y[l], orders_[t]), mod(q_[l][kept_[t]], orders_[t]))), orders_[t]);
      z[t] = acc;
    }
    return z;
  }

 private:
  IntMatrix g_;
  RationalMatrix g_inv_;
  IntMatrix q_;
  std::vector<std::size_t> kept_;
  IntVector orders_;
  std::vector<Element> generators_y_;
  FiniteQuadraticForm form_;
};

// ------------------------------------------------------------- root lattices

/// Negative definite Cartan Gram matrix, Bourbaki labelling (nodes 1..n).
inline IntMatrix cartan_gram(const RootLabel& label) {
  const int n = label.n;
  IntMatrix g(n, IntVector(n, 0));
  auto link = [&](int i, int j) { g[i - 1][j - 1] = g[j - 1][i - 1] = 1; };
  for (int i = 0; i < n; ++i) g[i][i] = -2;
  switch (label.type) {
    case RootType::A:
      for (int i = 1; i < n; ++i) link(i, i + 1);
      break;
    case RootType::D:
      for (int i = 1; i < n - 1; ++i) link(i, i + 1);
      link(n - 2, n);
      break;
    case RootType::E:
      link(1, 3);
      link(3, 4);
      link(4, 5);
      link(2, 4);
      for (int i = 5; i < n; ++i) link(i, i + 1);
      break;
  }
  return g;
}

/// Fundamental weights used as discriminant generators.
inline std::vector<int> generator_weights(const RootLabel& label) {
  switch (label.type) {
    case RootType::A: return {1};
    case RootType::D: return label.n % 2 ? std::vector<int>{label.n} : std::vector<int>{label.n - 1, label.n};
    case RootType::E:
      if (label.n == 6) return {1};
      if (label.n == 7) return {7};
      return {};
  }
  return {};
}

struct RootDiscriminant {
  RootLabel label;
  FiniteQuadraticForm form;
  std::vector<int> weights;  // node of the fundamental weight behind each generator
  RationalMatrix gram_inverse;

  /// Class of the fundamental weight at `node` in generator coordinates.
  Element weight_class(int node) const {
    const std::size_t k = weights.size();
    Element c(k, 0);
    for (;;) {
      bool integral = true;
      for (int r = 0; r < label.n && integral; ++r) {
        Rational v = gram_inverse[r][node - 1];
        for (std::size_t t = 0; t < k; ++t) v -= gram_inverse[r][weights[t] - 1] * c[t];
        integral = den(v) == 1;
      }
      if (integral) return c;
      std::size_t t = 0;
      while (t < k && ++c[t] == form.orders()[t]) c[t++] = 0;
      if (t == k) throw std::logic_error("weight class not found");
    }
  }
};

inline RootDiscriminant root_discriminant(const RootLabel& label) {
  const IntMatrix g = cartan_gram(label);
  RootDiscriminant out{label, {}, generator_weights(label), rational_inverse(g)};
  IntVector orders;
  std::vector<Rational> q;
  std::vector<std::vector<Rational>> b(out.weights.size(), std::vector<Rational>(out.weights.size()));
  for (std::size_t a = 0; a < out.weights.size(); ++a) {
    const int wa = out.weights[a] - 1;
    BigInt ord = 1;
    for (int r = 0; r < label.n; ++r) ord = boost::multiprecision::lcm(ord, den(out.gram_inverse[r][wa]));
    orders.push_back(to_int(ord));
    q.push_back(out.gram_inverse[wa][wa]);
    for (std::size_t c = 0; c < out.weights.size(); ++c) b[a][c] = out.gram_inverse[wa][out.weights[c] - 1];
  }
  out.form = FiniteQuadraticForm(orders, q, b);
  const Rational det = rational_determinant(g);
  if (Rational(out.form.order()) != abs(det)) throw std::logic_error("weight generators do not span the discriminant");
  // cross-check the group structure against the Smith form of the Gram matrix
  LatticeDiscriminant snf(g);
  if (snf.form().order() != out.form.order() || length(snf.form()) != length(out.form))
    throw std::logic_error("discriminant disagrees with Smith normal form");
  return out;
}

inline FiniteQuadraticForm disc_root(const RootLabel& label) { return root_discriminant(label).form; }

/// Node permutations of the Dynkin diagram (1-based images), identity first.
inline std::vector<std::vector<int>> diagram_symmetries(const RootLabel& label) {
  const int n = label.n;
  std::vector<int> id(n + 1);
  for (int i = 0; i <= n; ++i) id[i] = i;
  std::vector<std::vector<int>> out{id};
  if (label.type == RootType::A && n >= 2) {
    auto p = id;
    for (int i = 1; i <= n; ++i) p[i] = n + 1 - i;
    out.push_back(p);
  } else if (label.type == RootType::D && n > 4) {
    auto p = id;
    std::swap(p[n - 1], p[n]);
    out.push_back(p);
  } else if (label.type == RootType::D && n == 4) {
    std::vector<int> leaves{1, 3, 4};
    std::vector<int> perm = leaves;
    while (std::next_permutation(perm.begin(), perm.end())) {
      auto p = id;
      for (int i = 0; i < 3; ++i) p[leaves[i]] = perm[i];
      out.push_back(p);
    }
  } else if (label.type == RootType::E && n == 6) {
    auto p = id;
    std::swap(p[1], p[6]);
    std::swap(p[3], p[5]);
    out.push_back(p);
  }
  return out;
}

// --------------------------------------------------------- polarized forms

struct GeneratorTag {
  int component;  // index into components(); -1 for the polarization h
  std::string label;
  Int prime;  // prime of the primary part, 0 when the generator was not split
};

struct PolarizedForm {
  FiniteQuadraticForm form;
  std::vector<GeneratorTag> tags;
  Int h_square = 0;
  RootSpec spec;
  std::vector<RootLabel> components;
  std::vector<std::vector<std::size_t>> component_slots;
  std::size_t h_slot = 0;
  // per component: its scalar multiple of the weight generator on each slot (cyclic
  // components), so disc actions on the weight generators transfer to the slots
  std::vector<RootDiscriminant> root_discs;

  int rank_S() const { return spec.rank(); }
};

inline PolarizedForm polarized_disc(const RootSpec& spec, Int h2) {
  if (h2 < 2 || h2 % 2 != 0) throw std::invalid_argument("h^2 must be a positive even integer");
  PolarizedForm pf;
  pf.spec = spec;
  pf.h_square = h2;
  pf.components = spec.components();
  FiniteQuadraticForm acc;
  for (std::size_t c = 0; c < pf.components.size(); ++c) {
    const RootLabel& label = pf.components[c];
    RootDiscriminant rd = root_discriminant(label);
    std::vector<std::size_t> slots;
    const FiniteQuadraticForm& f = rd.form;
    auto push = [&](const FiniteQuadraticForm& piece, Int prime) {
      for (std::size_t i = 0; i < piece.rank(); ++i) {
        slots.push_back(acc.rank() + i);
        pf.tags.push_back({static_cast<int>(c), label.name(), prime});
      }
      acc = direct_sum(acc, piece);
    };
    if (f.rank() == 1 && prime_divisors(f.orders()[0]).size() > 1) {
      auto ps = prime_divisors(f.orders()[0]);
      std::reverse(ps.begin(), ps.end());
      for (Int p : ps) push(p_part(f, p).form, p);
    } else if (f.rank() > 0) {
      push(f, 0);
    }
    pf.component_slots.push_back(slots);
    pf.root_discs.push_back(std::move(rd));
  }
  pf.h_slot = acc.rank();
  pf.tags.push_back({-1, "h", 0});
  acc = direct_sum(acc, cyclic_form(1, h2));
  pf.form = FiniteQuadraticForm(acc.orders(), acc.q_values(), acc.b_table());
  return pf;
}

// ------------------------------------------------------- induced involutions

namespace detail {

// square matrix over a block of slots, entries mod the row slot order
using SlotMatrix = IntMatrix;

inline SlotMatrix slot_multiply(const SlotMatrix& a, const SlotMatrix& b, const IntVector& ords) {
  const std::size_t k = a.size();
  SlotMatrix c(k, IntVector(k, 0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      Int acc = 0;
      for (std::size_t l = 0; l < k; ++l) acc = mod(acc + a[i][l] * b[l][j], ords[i]);
      c[i][j] = acc;
    }
  return c;
}

/// Images of the component's Dynkin symmetries acting on its slots.
inline std::vector<SlotMatrix> component_actions(const PolarizedForm& pf, std::size_t c) {
  const auto& rd = pf.root_discs[c];
  const auto& slots = pf.component_slots[c];
  IntVector ords;
  for (std::size_t s : slots) ords.push_back(pf.form.orders()[s]);
  std::set<SlotMatrix> out;
  for (const auto& perm : diagram_symmetries(rd.label)) {
    // action on weight generators: column t is the class of the permuted weight
    const std::size_t k = rd.weights.size();
    IntMatrix w(k, IntVector(k, 0));
    for (std::size_t t = 0; t < k; ++t) {
      Element img = rd.weight_class(perm[rd.weights[t]]);
      for (std::size_t i = 0; i < k; ++i) w[i][t] = img[i];
    }
    SlotMatrix m(slots.size(), IntVector(slots.size(), 0));
    if (k == 1) {
      // cyclic: the weight acts by a scalar, which acts the same way on every primary slot
      for (std::size_t i = 0; i < slots.size(); ++i) m[i][i] = mod(w[0][0], ords[i]);
    } else {
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) m[i][j] = mod(w[i][j], ords[i]);
    }
    out.insert(m);
  }
  return {out.begin(), out.end()};
}

inline void involutive_permutations(int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  int i = 0;
  while (i < k && cur[i] >= 0) ++i;
  if (i == k) {
    out.push_back(cur);
    return;
  }
  cur[i] = i;
  involutive_permutations(k, cur, out);
  for (int j = i + 1; j < k; ++j) {
    if (cur[j] >= 0) continue;
    cur[i] = j;
    cur[j] = i;
    involutive_permutations(k, cur, out);
    cur[j] = -1;
  }
  cur[i] = -1;
}

}  // namespace detail

class too_many_involutions : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// All involutions of disc(S + Zh) induced by Dynkin symmetries times +-id on h,
/// sorted by matrix entries.
inline std::vector<DiscAutomorphism> disc_involutions(const PolarizedForm& pf, std::size_t cap = 200000) {
  const std::size_t total = pf.form.rank();
  // partial assignments: list of (slot -> column image) maps for each type
  using Partial = std::vector<std::pair<std::size_t, Element>>;  // slot, image column
  std::vector<std::vector<Partial>> per_type;
  std::size_t c = 0;
  while (c < pf.components.size()) {
    std::size_t e = c;
    while (e < pf.components.size() && pf.components[e] == pf.components[c]) ++e;
    const int k = static_cast<int>(e - c);
    const auto& slots0 = pf.component_slots[c];
    const std::size_t s = slots0.size();
    std::vector<Partial> options;
    if (s > 0) {
      IntVector ords;
      for (std::size_t sl : slots0) ords.push_back(pf.form.orders()[sl]);
      const auto group = detail::component_actions(pf, c);
      const auto ident = identity_matrix(s);
      auto inverse = [&](const detail::SlotMatrix& g) {
        for (const auto& h : group)
          if (detail::slot_multiply(g, h, ords) == ident) return h;
        throw std::logic_error("component action group is not closed under inverses");
      };
      std::vector<detail::SlotMatrix> invols;
      for (const auto& g : group)
        if (detail::slot_multiply(g, g, ords) == ident) invols.push_back(g);
      std::vector<std::vector<int>> perms;
      std::vector<int> cur(k, -1);
      detail::involutive_permutations(k, cur, perms);
      for (const auto& perm : perms) {
        // choices per orbit
        std::vector<std::vector<std::pair<int, detail::SlotMatrix>>> per_orbit;  // (copy, matrix) per orbit
        std::vector<std::pair<int, int>> orbits;
        for (int i = 0; i < k; ++i)
          if (perm[i] >= i) orbits.push_back({i, perm[i]});
        std::vector<std::size_t> idx(orbits.size(), 0);
        std::vector<std::size_t> sizes;
        for (const auto& [i, j] : orbits) sizes.push_back(i == j ? invols.size() : group.size());
        for (;;) {
          Partial p;
          for (std::size_t o = 0; o < orbits.size(); ++o) {
            const auto [i, j] = orbits[o];
            const auto& from = pf.component_slots[c + i];
            const auto& to = pf.component_slots[c + j];
            const detail::SlotMatrix g = i == j ? invols[idx[o]] : group[idx[o]];
            // block i -> block j via g; block j -> block i via g^-1
            auto emit = [&](const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                            const detail::SlotMatrix& m) {
              for (std::size_t col = 0; col < s; ++col) {
                Element img(total, 0);
                for (std::size_t row = 0; row < s; ++row) img[dst[row]] = m[row][col];
                p.push_back({src[col], img});
              }
            };
            emit(from, to, g);
            if (i != j) emit(to, from, inverse(g));
          }
          options.push_back(std::move(p));
          if (options.size() > cap) throw too_many_involutions("too many Dynkin involutions to enumerate");
          std::size_t o = 0;
          while (o < idx.size() && ++idx[o] == sizes[o]) idx[o++] = 0;
          if (o == idx.size()) break;
        }
      }
    } else {
      options.push_back({});
    }
    per_type.push_back(std::move(options));
    c = e;
  }
  std::set<DiscAutomorphism> result;
  std::vector<std::size_t> idx(per_type.size(), 0);
  for (;;) {
    for (Int sign : {Int(1), Int(-1)}) {
      IntMatrix m(total, IntVector(total, 0));
      for (std::size_t t = 0; t < per_type.size(); ++t)
        for (const auto& [slot, img] : per_type[t][idx[t]])
          for (std::size_t row = 0; row < total; ++row) m[row][slot] = img[row];
      m[pf.h_slot][pf.h_slot] = mod(sign, pf.h_square);
      result.insert(DiscAutomorphism(std::move(m)));
      if (result.size() > cap) throw too_many_involutions("too many Dynkin involutions to enumerate");
    }
    std::size_t t = 0;
    while (t < idx.size() && ++idx[t] == per_type[t].size()) idx[t++] = 0;
    if (t == idx.size()) break;
  }
  return {result.begin(), result.end()};
}

// ---------------------------------------------------------- binary lattices

struct BinaryLattice {
  Int a, b, d;  // Gram [[a, b], [b, d]]

  BinaryLattice(Int a_, Int b_, Int d_) : a(a_), b(b_), d(d_) {
    if (a <= 0 || checked_sub(checked_mul(a, d), checked_mul(b, b)) <= 0)
      throw std::invalid_argument("binary lattice is not positive definite");
    if (a % 2 != 0 || d % 2 != 0) throw std::invalid_argument("binary lattice is not even");
  }

  Int det() const { return a * d - b * b; }
  IntMatrix gram() const { return {{a, b}, {b, d}}; }
  Int norm(Int s, Int t) const { return a * s * s + 2 * b * s * t + d * t * t; }
  Int inner(Int s, Int t, Int s2, Int t2) const { return a * s * s2 + b * (s * t2 + t * s2) + d * t * t2; }
};

struct BinaryIsometry {
  IntMatrix matrix;  // columns are images of e1, e2
  Int det;
  bool reflection;  // det -1 (such an involution has trace 0)
};

inline Int isqrt_floor(Int n) {
  if (n < 0) return -1;
  Int r = static_cast<Int>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline std::vector<std::pair<Int, Int>> vectors_of_norm(const BinaryLattice& t, Int norm) {
  std::vector<std::pair<Int, Int>> out;
  const Int smax = isqrt_floor(norm * t.d / t.det()) + 1;
  const Int tmax = isqrt_floor(norm * t.a / t.det()) + 1;
  for (Int s = -smax; s <= smax; ++s)
    for (Int u = -tmax; u <= tmax; ++u)
      if (t.norm(s, u) == norm) out.push_back({s, u});
  return out;
}

inline std::vector<BinaryIsometry> binary_autos(const BinaryLattice& t) {
  std::vector<BinaryIsometry> out;
  const auto xs = vectors_of_norm(t, t.a);
  const auto ys = vectors_of_norm(t, t.d);
  for (const auto& [s1, t1] : xs)
    for (const auto& [s2, t2] : ys) {
      if (t.inner(s1, t1, s2, t2) != t.b) continue;
      const Int det = s1 * t2 - s2 * t1;
      if (det != 1 && det != -1) continue;
      out.push_back({{{s1, s2}, {t1, t2}}, det, det == -1});
    }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.matrix < y.matrix; });
  return out;
}

struct SkewWitness {
  IntMatrix reflection;
  DiscAutomorphism phi;
};

/// Searches for a skew isometry of T whose disc action matches an induced involution.
inline std::optional<SkewWitness> maximizing_skew_witness(const BinaryLattice& t, const PolarizedForm& pf) {
  LatticeDiscriminant dt(t.gram());
  const FiniteQuadraticForm& ft = dt.form();
  const FiniteQuadraticForm& fs = pf.form;
  if (ft.order() != fs.order()) throw std::invalid_argument("disc T and disc S_h have different orders");
  for (Int p : prime_divisors(fs.order()))
    if (length_p(ft, p) != length_p(fs, p)) throw std::invalid_argument("disc T and disc S_h have different p-lengths");
  const auto involutions = disc_involutions(pf);
  const std::set<DiscAutomorphism> inv_set(involutions.begin(), involutions.end());
  // all elements of disc S_h with their orders
  const std::vector<Element> s_elems = whole_group(fs).elements();
  const std::vector<Element> t_elems = whole_group(ft).elements();
  // anti-isometries psi: images of the generators of disc T
  std::vector<std::vector<Element>> psis;
  std::vector<Element> cur;
  const std::size_t kt = ft.rank();
  auto neg_q = [&](const Element& x) { return mod(-ft.q_scaled(x) * 1, 2 * ft.denominator()); };
  std::function<void()> rec = [&]() {
    const std::size_t i = cur.size();
    if (i == kt) {
      if (Subgroup(fs, cur).order() == fs.order()) psis.push_back(cur);
      return;
    }
    const Element gi = ft.generator(i);
    const Rational want_q(neg_q(gi), ft.denominator());
    for (const auto& y : s_elems) {
      if (fs.element_order(y) != ft.orders()[i]) continue;
      if (fs.eval_q(y) != want_q) continue;
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j)
        ok = fs.eval_b(y, cur[j]) == mod1(-ft.eval_b(gi, ft.generator(j)));
      if (!ok) continue;
      cur.push_back(y);
      rec();
      cur.pop_back();
    }
  };
  rec();
  if (psis.empty()) throw std::invalid_argument("disc T is not anti-isometric to disc S_h");
  for (const auto& iso : binary_autos(t)) {
    if (!iso.reflection) continue;
    const auto& r = iso.matrix;
    // action on y-coordinates is R^{-T} = det * [[r11, -r10], [-r01, r00]]
    const Int dt_ = iso.det;
    const IntMatrix rit{{dt_ * r[1][1], -dt_ * r[1][0]}, {-dt_ * r[0][1], dt_ * r[0][0]}};
    std::vector<Element> rbar;  // images of disc T generators
    for (const auto& y : dt.generators_y()) {
      IntVector y2{rit[0][0] * y[0] + rit[0][1] * y[1], rit[1][0] * y[0] + rit[1][1] * y[1]};
      rbar.push_back(dt.project(y2));
    }
    auto rbar_apply = [&](const Element& x) {
      Element z = ft.zero();
      for (std::size_t i = 0; i < kt; ++i) z = ft.add(z, ft.scale(x[i], rbar[i]));
      return z;
    };
    for (const auto& psi : psis) {
      auto psi_apply = [&](const Element& x) {
        Element z = fs.zero();
        for (std::size_t i = 0; i < kt; ++i) z = fs.add(z, fs.scale(x[i], psi[i]));
        return z;
      };
      std::map<Element, Element> psi_inv;
      for (const auto& x : t_elems) psi_inv[psi_apply(x)] = x;
      std::vector<Element> images;
      for (std::size_t j = 0; j < fs.rank(); ++j) images.push_back(psi_apply(rbar_apply(psi_inv.at(fs.generator(j)))));
      DiscAutomorphism phi = DiscAutomorphism::from_images(fs, images);
      if (inv_set.count(phi)) return SkewWitness{r, phi};
    }
  }
  return std::nullopt;
}

inline bool maximizing_has_skew(const BinaryLattice& t, const PolarizedForm& pf) {
  return maximizing_skew_witness(t, pf).has_value();
}

}  // namespace realstrata
