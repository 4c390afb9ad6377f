#pragma once

// Integer lattice machinery for finite abelian groups G = Z/o_1 + ... + Z/o_k.
//
// A subgroup H of G is handled through its preimage lattice in Z^k, which
// always contains o_j e_j.  The lattice is kept as an upper triangular
// (Hermite) basis whose pivots d_j divide o_j, so |H| = prod o_j / d_j.

#include <cstddef>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "realstrata/integer.hpp"

namespace realstrata {

using IntVector = std::vector<Int>;
using IntMatrix = std::vector<IntVector>;

inline IntMatrix identity_matrix(std::size_t n) {
  IntMatrix m(n, IntVector(n, 0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

/// Hermite echelon basis of a subgroup of Z/o_1 + ... + Z/o_k.
///
/// Optionally tracks, for every row, its expression as a combination of the
/// inserted generators, which makes `solve` available.
class Echelon {
 public:
  explicit Echelon(IntVector orders, IntVector tracked_orders = {})
      : orders_(std::move(orders)), tracked_orders_(std::move(tracked_orders)) {
    const std::size_t k = orders_.size();
    for (Int o : orders_)
      if (o < 1) throw std::invalid_argument("group orders must be positive");
    rows_.assign(k, IntVector(k, 0));
    combos_.assign(k, IntVector(tracked_orders_.size(), 0));
    for (std::size_t j = 0; j < k; ++j) rows_[j][j] = orders_[j];
  }

  std::size_t rank() const { return orders_.size(); }
  const IntVector& orders() const { return orders_; }

  /// Adds a generator; `combo` is its expression in tracked generators.
  void insert(IntVector v, IntVector combo = {}) {
    if (v.size() != rank()) throw std::invalid_argument("generator has wrong length");
    if (combo.empty()) combo.assign(tracked_orders_.size(), 0);
    reduce_vector(v, 0);
    reduce_combo(combo);
    insert_from(std::move(v), std::move(combo), 0);
    finalized_ = false;
  }

  /// Closes the row set under the relations o_j e_j and reduces to Hermite form.
  void finalize() {
    if (finalized_) return;
    for (std::size_t j = 0; j < rank(); ++j) {
      Int mult = orders_[j] / rows_[j][j];
      if (mult == 1) continue;
      IntVector w(rank());
      IntVector c(tracked_orders_.size());
      for (std::size_t c2 = 0; c2 < rank(); ++c2) w[c2] = checked_mul(mult, rows_[j][c2]);
      for (std::size_t t = 0; t < c.size(); ++t) c[t] = checked_mul(mult, combos_[j][t]);
      reduce_vector(w, j + 1);
      w[j] = 0;
      reduce_combo(c);
      insert_from(std::move(w), std::move(c), j + 1);
    }
    for (std::size_t jj = rank(); jj-- > 0;) {
      const Int d = rows_[jj][jj];
      for (std::size_t i = 0; i < jj; ++i) {
        Int q = rows_[i][jj] / d;
        if (rows_[i][jj] - q * d < 0) --q;
        if (q != 0) axpy(i, jj, -q);
      }
    }
    finalized_ = true;
  }

  Int pivot(std::size_t j) const { return rows_[j][j]; }
  const IntVector& row(std::size_t j) const { return rows_[j]; }
  const IntVector& combo(std::size_t j) const { return combos_[j]; }

  /// Indices of rows that contribute to the subgroup (pivot < order).
  std::vector<std::size_t> active_rows() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < rank(); ++j)
      if (rows_[j][j] < orders_[j]) out.push_back(j);
    return out;
  }

  Int subgroup_order() const {
    Int n = 1;
    for (std::size_t j = 0; j < rank(); ++j) n = checked_mul(n, orders_[j] / rows_[j][j]);
    return n;
  }

  /// Coordinates of x with respect to all rows (zero on inactive rows), or nothing.
  std::optional<IntVector> decompose(IntVector x) const {
    require_finalized();
    reduce_vector(x, 0);
    IntVector coords(rank(), 0);
    for (std::size_t j = 0; j < rank(); ++j) {
      Int xj = mod(x[j], orders_[j]);
      if (xj == 0) continue;
      const Int d = rows_[j][j];
      if (xj % d != 0) return std::nullopt;
      const Int c = xj / d;
      coords[j] = c;
      for (std::size_t c2 = j; c2 < rank(); ++c2)
        x[c2] = mod(checked_sub(x[c2], checked_mul(c, rows_[j][c2])), orders_[c2]);
    }
    return coords;
  }

  bool contains(const IntVector& x) const { return decompose(x).has_value(); }

  /// Expression of x as a combination of the tracked generators.
  std::optional<IntVector> solve(const IntVector& x) const {
    auto coords = decompose(x);
    if (!coords) return std::nullopt;
    IntVector out(tracked_orders_.size(), 0);
    for (std::size_t j = 0; j < rank(); ++j) {
      if ((*coords)[j] == 0) continue;
      for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = mod(checked_add(out[t], checked_mul((*coords)[j], combos_[j][t])), tracked_orders_[t]);
    }
    return out;
  }

  bool operator==(const Echelon& other) const {
    require_finalized();
    other.require_finalized();
    return orders_ == other.orders_ && rows_ == other.rows_;
  }

 private:
  void require_finalized() const {
    if (!finalized_) throw std::logic_error("echelon basis used before finalize()");
  }

  void reduce_vector(IntVector& v, std::size_t from) const {
    for (std::size_t c = from; c < rank(); ++c) v[c] = mod(v[c], orders_[c]);
  }

  void reduce_combo(IntVector& c) const {
    for (std::size_t t = 0; t < c.size(); ++t) c[t] = mod(c[t], tracked_orders_[t]);
  }

  // row_i += q * row_j
  void axpy(std::size_t i, std::size_t j, Int q) {
    for (std::size_t c = 0; c < rank(); ++c) {
      Int v = checked_add(rows_[i][c], checked_mul(q, rows_[j][c]));
      rows_[i][c] = (c == i) ? v : mod(v, orders_[c]);
    }
    for (std::size_t t = 0; t < tracked_orders_.size(); ++t)
      combos_[i][t] = mod(checked_add(combos_[i][t], checked_mul(q, combos_[j][t])), tracked_orders_[t]);
  }

  void insert_from(IntVector v, IntVector combo, std::size_t start) {
    for (std::size_t j = start; j < rank(); ++j) {
      Int vj = mod(v[j], orders_[j]);
      if (vj == 0) {
        v[j] = 0;
        continue;
      }
      IntVector& r = rows_[j];
      IntVector& rc = combos_[j];
      const Int a = r[j];
      auto [g, s, t] = xgcd(a, vj);
      IntVector new_r(rank(), 0), new_v(rank(), 0);
      IntVector new_rc(combo.size(), 0), new_vc(combo.size(), 0);
      const Int a_g = a / g, v_g = vj / g;
      for (std::size_t c = j; c < rank(); ++c) {
        Int rv = c == j ? a : r[c];
        Int vv = c == j ? vj : v[c];
        new_r[c] = checked_add(checked_mul(s, rv), checked_mul(t, vv));
        new_v[c] = checked_sub(checked_mul(a_g, vv), checked_mul(v_g, rv));
        if (c != j) {
          new_r[c] = mod(new_r[c], orders_[c]);
          new_v[c] = mod(new_v[c], orders_[c]);
        }
      }
      for (std::size_t t2 = 0; t2 < combo.size(); ++t2) {
        new_rc[t2] = mod(checked_add(checked_mul(s, rc[t2]), checked_mul(t, combo[t2])), tracked_orders_[t2]);
        new_vc[t2] = mod(checked_sub(checked_mul(a_g, combo[t2]), checked_mul(v_g, rc[t2])), tracked_orders_[t2]);
      }
      new_r[j] = g;
      new_v[j] = 0;
      r = std::move(new_r);
      rc = std::move(new_rc);
      v = std::move(new_v);
      combo = std::move(new_vc);
    }
  }

  IntVector orders_;
  IntVector tracked_orders_;
  IntMatrix rows_;
  IntMatrix combos_;
  bool finalized_ = true;
};

/// Echelon basis of the subgroup generated by `gens`.
inline Echelon span(const IntVector& orders, const IntMatrix& gens, bool track = false) {
  IntVector tracked;
  if (track) {
    for (const auto& g : gens) {
      Int ord = 1;
      for (std::size_t i = 0; i < orders.size(); ++i) ord = lcm(ord, orders[i] / gcd(orders[i], mod(g[i], orders[i])));
      tracked.push_back(ord);
    }
  }
  Echelon e(orders, tracked);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    IntVector combo;
    if (track) {
      combo.assign(gens.size(), 0);
      combo[i] = 1;
    }
    e.insert(gens[i], combo);
  }
  e.finalize();
  return e;
}

/// Intersection of `within` with the kernel of x -> sum_i x_i c_i (mod modulus).
/// The character must be well defined on G, i.e. o_i c_i = 0 (mod modulus).
inline Echelon kernel_of_character(const Echelon& within, const IntVector& character, Int modulus) {
  const auto& orders = within.orders();
  const std::size_t k = orders.size();
  IntMatrix rows(k);
  IntVector w(k);
  for (std::size_t i = 0; i < k; ++i) {
    rows[i] = within.row(i);
    Int acc = 0;
    for (std::size_t c = 0; c < k; ++c)
      acc = mod(checked_add(acc, checked_mul(mod(rows[i][c], orders[c]), mod(character[c], modulus))), modulus);
    w[i] = acc;
  }
  auto reduce = [&](IntVector& v) {
    for (std::size_t c = 0; c < k; ++c) v[c] = mod(v[c], orders[c]);
  };
  IntVector acc_row = k ? rows[0] : IntVector{};
  Int acc_w = k ? w[0] : 0;
  IntMatrix kernel_gens;
  for (std::size_t i = 1; i < k; ++i) {
    if (w[i] == 0) {
      kernel_gens.push_back(rows[i]);
      continue;
    }
    auto [g, s, t] = xgcd(acc_w, w[i]);
    IntVector new_acc(k), new_i(k);
    for (std::size_t c = 0; c < k; ++c) {
      new_acc[c] = checked_add(checked_mul(s, acc_row[c]), checked_mul(t, rows[i][c]));
      new_i[c] = checked_sub(checked_mul(acc_w / g, rows[i][c]), checked_mul(w[i] / g, acc_row[c]));
    }
    reduce(new_acc);
    reduce(new_i);
    acc_row = std::move(new_acc);
    acc_w = g;
    kernel_gens.push_back(std::move(new_i));
  }
  if (k) {
    Int mult = modulus / gcd(acc_w, modulus);
    for (auto& v : acc_row) v = checked_mul(v, mult);
    reduce(acc_row);
    kernel_gens.push_back(acc_row);
  }
  return span(orders, kernel_gens);
}

/// Smith normal form P*A*Q = diag(d) with the column transform Q and its inverse.
struct SmithForm {
  IntVector diagonal;  // length = number of columns; 0 for free columns
  IntMatrix q;         // columns x columns
  IntMatrix q_inverse;
};

inline SmithForm smith_normal_form(IntMatrix a, std::size_t cols) {
  const std::size_t rows = a.size();
  SmithForm out;
  out.q = identity_matrix(cols);
  out.q_inverse = identity_matrix(cols);
  auto swap_cols = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    for (auto& r : a) std::swap(r[i], r[j]);
    for (auto& r : out.q) std::swap(r[i], r[j]);
    std::swap(out.q_inverse[i], out.q_inverse[j]);
  };
  // col_j += k col_i
  auto add_col = [&](std::size_t i, std::size_t j, Int k) {
    if (k == 0) return;
    for (auto& r : a) r[j] = checked_add(r[j], checked_mul(k, r[i]));
    for (auto& r : out.q) r[j] = checked_add(r[j], checked_mul(k, r[i]));
    for (std::size_t c = 0; c < cols; ++c)
      out.q_inverse[i][c] = checked_sub(out.q_inverse[i][c], checked_mul(k, out.q_inverse[j][c]));
  };
  auto add_row = [&](std::size_t i, std::size_t j, Int k) {
    if (k == 0) return;
    for (std::size_t c = 0; c < cols; ++c) a[j][c] = checked_add(a[j][c], checked_mul(k, a[i][c]));
  };
  const std::size_t n = std::min(rows, cols);
  out.diagonal.assign(cols, 0);
  for (std::size_t t = 0; t < n; ++t) {
    // pivot: smallest nonzero entry of the trailing block
    std::size_t pi = rows, pj = cols;
    Int best = 0;
    for (std::size_t i = t; i < rows; ++i)
      for (std::size_t j = t; j < cols; ++j)
        if (a[i][j] != 0 && (best == 0 || std::abs(a[i][j]) < best)) {
          best = std::abs(a[i][j]);
          pi = i;
          pj = j;
        }
    if (best == 0) break;
    std::swap(a[t], a[pi]);
    swap_cols(t, pj);
    for (;;) {
      bool dirty = false;
      for (std::size_t i = t + 1; i < rows; ++i) add_row(t, i, -(a[i][t] / a[t][t]));
      for (std::size_t j = t + 1; j < cols; ++j) add_col(t, j, -(a[t][j] / a[t][t]));
      std::size_t mi = rows, mj = cols;
      Int m = std::abs(a[t][t]);
      for (std::size_t i = t + 1; i < rows; ++i)
        if (a[i][t] != 0 && std::abs(a[i][t]) < m) {
          m = std::abs(a[i][t]);
          mi = i;
          mj = cols;
        }
      for (std::size_t j = t + 1; j < cols; ++j)
        if (a[t][j] != 0 && std::abs(a[t][j]) < m) {
          m = std::abs(a[t][j]);
          mj = j;
          mi = rows;
        }
      if (mi < rows) {
        std::swap(a[t], a[mi]);
        dirty = true;
      } else if (mj < cols) {
        swap_cols(t, mj);
        dirty = true;
      }
      if (dirty) continue;
      bool clean = true;
      for (std::size_t i = t + 1; i < rows && clean; ++i) clean = a[i][t] == 0;
      for (std::size_t j = t + 1; j < cols && clean; ++j) clean = a[t][j] == 0;
      if (!clean) continue;
      std::size_t bad = rows;
      for (std::size_t i = t + 1; i < rows && bad == rows; ++i)
        for (std::size_t j = t + 1; j < cols; ++j)
          if (a[i][j] % a[t][t] != 0) {
            bad = i;
            break;
          }
      if (bad == rows) break;
      add_row(bad, t, 1);
    }
    out.diagonal[t] = std::abs(a[t][t]);
  }
  return out;
}

/// Independent generators of H/K for subgroups K <= H of G, with a projection H -> H/K.
class QuotientPresentation {
 public:
  QuotientPresentation(const Echelon& big, const IntMatrix& small_gens) : big_(big) {
    const auto& orders = big_.orders();
    active_ = big_.active_rows();
    const std::size_t s = active_.size();
    std::vector<std::size_t> pos(orders.size(), s);
    for (std::size_t i = 0; i < s; ++i) pos[active_[i]] = i;
    auto coords_of = [&](const IntVector& x) {
      auto full = big_.decompose(x);
      if (!full) throw std::invalid_argument("element not in the ambient subgroup");
      IntVector c(s, 0);
      for (std::size_t j = 0; j < full->size(); ++j)
        if ((*full)[j] != 0) c[pos[j]] = (*full)[j];
      return c;
    };
    IntMatrix relations;
    for (std::size_t i = 0; i < s; ++i) {
      const std::size_t j = active_[i];
      const Int mult = orders[j] / big_.pivot(j);
      IntVector w(orders.size());
      for (std::size_t c = 0; c < orders.size(); ++c) w[c] = checked_mul(mult, big_.row(j)[c]);
      IntVector r = coords_of(w);
      for (auto& v : r) v = -v;
      r[i] = checked_add(r[i], mult);
      relations.push_back(std::move(r));
    }
    for (const auto& g : small_gens) relations.push_back(coords_of(g));
    SmithForm snf = smith_normal_form(relations, s);
    q_ = snf.q;
    for (std::size_t i = 0; i < s; ++i) {
      const Int d = snf.diagonal[i];
      if (d == 0) throw std::logic_error("quotient presentation is not finite");
      if (d == 1) continue;
      IntVector gen(orders.size(), 0);
      for (std::size_t l = 0; l < s; ++l) {
        const Int coeff = snf.q_inverse[i][l];
        if (coeff == 0) continue;
        const auto& r = big_.row(active_[l]);
        for (std::size_t c = 0; c < orders.size(); ++c)
          gen[c] = mod(checked_add(gen[c], checked_mul(mod(coeff, orders[c]), mod(r[c], orders[c]))), orders[c]);
      }
      kept_.push_back(i);
      orders_.push_back(d);
      generators_.push_back(std::move(gen));
    }
    for (auto& row : q_)
      for (std::size_t t = 0; t < kept_.size(); ++t) row[kept_[t]] = mod(row[kept_[t]], orders_[t]);
    coords_of_ = coords_of;
  }

  const IntVector& orders() const { return orders_; }
  const IntMatrix& generators() const { return generators_; }
  Int order() const {
    Int n = 1;
    for (Int o : orders_) n = checked_mul(n, o);
    return n;
  }

  /// Coordinates of the class of x (x must lie in the big subgroup).
  IntVector project(const IntVector& x) const {
    IntVector y = coords_of_(x);
    IntVector z(kept_.size(), 0);
    for (std::size_t t = 0; t < kept_.size(); ++t) {
      Int acc = 0;
      for (std::size_t l = 0; l < y.size(); ++l)
        acc = mod(checked_add(acc, checked_mul(y[l], q_[l][kept_[t]])), orders_[t]);
      z[t] = acc;
    }
    return z;
  }

 private:
  Echelon big_;
  std::vector<std::size_t> active_;
  std::vector<std::size_t> kept_;
  IntVector orders_;
  IntMatrix generators_;
  IntMatrix q_;
  std::function<IntVector(const IntVector&)> coords_of_;
};

}  // namespace realstrata
