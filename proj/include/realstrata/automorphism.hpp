#pragma once

#include <stdexcept>
#include <vector>

#include "realstrata/fqf.hpp"
#include "realstrata/subgroup.hpp"

namespace realstrata {

/// Group endomorphism of a form given on generators: column j is the image of g_j.
class DiscAutomorphism {
 public:
  DiscAutomorphism() = default;
  explicit DiscAutomorphism(IntMatrix columns_as_rows_major) : m_(std::move(columns_as_rows_major)) {}

  static DiscAutomorphism identity(std::size_t k) { return DiscAutomorphism(identity_matrix(k)); }

  static DiscAutomorphism from_images(const FiniteQuadraticForm& f, const std::vector<Element>& images) {
    const std::size_t k = f.rank();
    if (images.size() != k) throw std::invalid_argument("need one image per generator");
    IntMatrix m(k, IntVector(k, 0));
    for (std::size_t j = 0; j < k; ++j) {
      Element y = f.reduce(images[j]);
      for (std::size_t i = 0; i < k; ++i) m[i][j] = y[i];
    }
    return DiscAutomorphism(std::move(m));
  }

  const IntMatrix& matrix() const { return m_; }
  std::size_t size() const { return m_.size(); }

  Element image_of_generator(std::size_t j) const {
    Element y(m_.size());
    for (std::size_t i = 0; i < m_.size(); ++i) y[i] = m_[i][j];
    return y;
  }

  Element apply(const FiniteQuadraticForm& f, const Element& x) const {
    if (x.size() != m_.size() || f.rank() != m_.size()) throw std::invalid_argument("dimension mismatch");
    Element y(m_.size(), 0);
    for (std::size_t i = 0; i < m_.size(); ++i) {
      const Int o = f.orders()[i];
      Int acc = 0;
      for (std::size_t j = 0; j < m_.size(); ++j)
        if (x[j] && m_[i][j]) acc = mod(checked_add(acc, checked_mul(mod(x[j], o), m_[i][j])), o);
      y[i] = acc;
    }
    return y;
  }

  /// this after other.
  DiscAutomorphism compose(const FiniteQuadraticForm& f, const DiscAutomorphism& other) const {
    std::vector<Element> images;
    for (std::size_t j = 0; j < m_.size(); ++j) images.push_back(apply(f, other.image_of_generator(j)));
    return from_images(f, images);
  }

  bool is_identity(const FiniteQuadraticForm& f) const {
    for (std::size_t j = 0; j < m_.size(); ++j)
      if (image_of_generator(j) != f.reduce(f.generator(j))) return false;
    return true;
  }

  /// Well defined, bijective, and preserving q (hence b).
  bool is_automorphism(const FiniteQuadraticForm& f) const {
    const std::size_t k = f.rank();
    if (m_.size() != k) return false;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < k; ++i)
        if (mod(checked_mul(f.orders()[j], m_[i][j]), f.orders()[i]) != 0) return false;
    std::vector<Element> images;
    for (std::size_t j = 0; j < k; ++j) images.push_back(image_of_generator(j));
    for (std::size_t i = 0; i < k; ++i) {
      if (f.q_scaled(images[i]) != f.q_scaled(f.generator(i))) return false;
      for (std::size_t j = i + 1; j < k; ++j)
        if (f.b_scaled(images[i], images[j]) != f.b_scaled(f.generator(i), f.generator(j))) return false;
    }
    return Subgroup(f, images).order() == f.order();
  }

  bool is_involution(const FiniteQuadraticForm& f) const { return compose(f, *this).is_identity(f); }

  bool operator==(const DiscAutomorphism& o) const { return m_ == o.m_; }
  bool operator<(const DiscAutomorphism& o) const { return m_ < o.m_; }

 private:
  IntMatrix m_;
};

}  // namespace realstrata
