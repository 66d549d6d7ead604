#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qps/ground_field.hpp"
#include "qps/linalg.hpp"

namespace qps {

/// structure[s][t][u] is the coefficient of basis element u in s*t.
using StructureTable = std::vector<std::vector<std::vector<FieldElement>>>;

/// A finite-dimensional associative algebra over the ground field, given by a
/// labeled basis (the first label is the unit) and structure constants.
///
/// Elements are stored flat: the coefficient of zeta^p on basis element u sits
/// at index u * field_degree + p. Multiplication uses a precomputed table over
/// this flat Q-basis.
class AlgebraPresentation {
 public:
  AlgebraPresentation(std::string label, std::shared_ptr<const GroundField> field, std::vector<std::string> basis,
                      StructureTable structure)
      : label_(std::move(label)), field_(std::move(field)), basis_(std::move(basis)), structure_(std::move(structure)) {
    const std::size_t d = basis_.size();
    if (d == 0) throw EngineError("algebra '" + label_ + "' has an empty basis");
    if (structure_.size() != d) throw EngineError("algebra '" + label_ + "': structure table has wrong size");
    for (const auto& row : structure_) {
      if (row.size() != d) throw EngineError("algebra '" + label_ + "': structure table has wrong size");
      for (const auto& entry : row) {
        if (entry.size() != d) throw EngineError("algebra '" + label_ + "': structure table has wrong size");
        for (const auto& c : entry)
          if (c.size() != field_->degree()) throw EngineError("algebra '" + label_ + "': coefficient has wrong length");
      }
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        if (basis_[i] == basis_[j]) throw EngineError("algebra '" + label_ + "': repeated basis label " + basis_[i]);
    build_flat_table();
  }

  /// The one-dimensional algebra F itself, basis {unit_label}.
  static std::shared_ptr<const AlgebraPresentation> ground(std::string label, std::shared_ptr<const GroundField> field,
                                                           std::string unit_label = "e") {
    StructureTable sc(1, std::vector<std::vector<FieldElement>>(1, std::vector<FieldElement>{field->one()}));
    return std::make_shared<const AlgebraPresentation>(std::move(label), field, std::vector<std::string>{std::move(unit_label)},
                                                       std::move(sc));
  }

  const std::string& label() const { return label_; }
  const GroundField& field() const { return *field_; }
  const std::shared_ptr<const GroundField>& field_ptr() const { return field_; }
  std::size_t dim() const { return basis_.size(); }
  std::size_t flat_dim() const { return basis_.size() * field_->degree(); }
  const std::vector<std::string>& basis_labels() const { return basis_; }
  const StructureTable& structure() const { return structure_; }

  std::optional<std::size_t> find_basis(const std::string& l) const {
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (basis_[i] == l) return i;
    return std::nullopt;
  }

  Coeffs zero() const { return Coeffs(flat_dim()); }
  Coeffs unit() const { return basis_element(0); }
  Coeffs basis_element(std::size_t s) const {
    Coeffs x(flat_dim());
    x[s * field_->degree()] = 1;
    return x;
  }
  /// c * e for a ground-field scalar c.
  Coeffs scalar(const FieldElement& c) const {
    Coeffs x(flat_dim());
    for (std::size_t p = 0; p < c.size(); ++p) x[p] = c[p];
    return x;
  }
  /// Ground-field coefficient of basis element u.
  FieldElement component(const Coeffs& x, std::size_t u) const {
    const std::size_t fd = field_->degree();
    return FieldElement(x.begin() + static_cast<std::ptrdiff_t>(u * fd), x.begin() + static_cast<std::ptrdiff_t>((u + 1) * fd));
  }

  /// out += x * y
  void mul_add(const Coeffs& x, const Coeffs& y, Coeffs& out) const {
    const std::size_t n = flat_dim();
    for (std::size_t a = 0; a < n; ++a) {
      if (sgn(x[a]) == 0) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (sgn(y[b]) == 0) continue;
        const Rational p = x[a] * y[b];
        for (const auto& [g, c] : flat_[a * n + b]) out[g] += p * c;
      }
    }
  }

  Coeffs mul(const Coeffs& x, const Coeffs& y) const {
    Coeffs out(flat_dim());
    mul_add(x, y, out);
    return out;
  }

  /// x * (basis element s)
  Coeffs mul_basis_right(const Coeffs& x, std::size_t s) const {
    const std::size_t n = flat_dim();
    const std::size_t b = s * field_->degree();
    Coeffs out(n);
    for (std::size_t a = 0; a < n; ++a) {
      if (sgn(x[a]) == 0) continue;
      for (const auto& [g, c] : flat_[a * n + b]) out[g] += x[a] * c;
    }
    return out;
  }

  /// c * x for a ground-field scalar c (central).
  Coeffs scale(const FieldElement& c, const Coeffs& x) const {
    const std::size_t fd = field_->degree();
    Coeffs out(flat_dim());
    if (fd == 1) {
      for (std::size_t i = 0; i < out.size(); ++i)
        if (sgn(x[i]) != 0) out[i] = c[0] * x[i];
      return out;
    }
    for (std::size_t u = 0; u < dim(); ++u) field_->mul_add(c.data(), x.data() + u * fd, out.data() + u * fd);
    return out;
  }

  /// Matrix over Q of left multiplication by x on the flat basis.
  DenseMatrix left_multiplication(const Coeffs& x) const {
    const std::size_t n = flat_dim();
    DenseMatrix m(n);
    for (std::size_t b = 0; b < n; ++b) {
      Coeffs e(n);
      e[b] = 1;
      const Coeffs col = mul(x, e);
      for (std::size_t i = 0; i < n; ++i) m.at(i, b) = col[i];
    }
    return m;
  }

  /// Two-sided inverse of x; throws when x is zero or not invertible.
  Coeffs inverse(const Coeffs& x) const {
    if (qps::is_zero(x)) throw EngineError("inverse of zero in algebra '" + label_ + "'");
    auto y = solve(left_multiplication(x), unit());
    if (!y) throw EngineError("element of '" + label_ + "' is not invertible: the presentation is not a division algebra");
    if (mul(*y, x) != unit()) throw EngineError("element of '" + label_ + "' has a one-sided inverse only");
    return *y;
  }

  bool is_commutative() const {
    for (std::size_t s = 0; s < dim(); ++s)
      for (std::size_t t = s + 1; t < dim(); ++t)
        if (structure_[s][t] != structure_[t][s]) return false;
    return true;
  }

  bool same_as(const AlgebraPresentation& o) const {
    return label_ == o.label_ && basis_ == o.basis_ && field_->same_as(*o.field_) && structure_ == o.structure_;
  }

 private:
  void build_flat_table() {
    const std::size_t fd = field_->degree();
    const std::size_t n = flat_dim();
    flat_.assign(n * n, {});
    for (std::size_t s = 0; s < dim(); ++s)
      for (std::size_t p = 0; p < fd; ++p)
        for (std::size_t t = 0; t < dim(); ++t)
          for (std::size_t q = 0; q < fd; ++q) {
            const FieldElement zp = field_->zeta_power(p + q);
            auto& cell = flat_[(s * fd + p) * n + (t * fd + q)];
            for (std::size_t u = 0; u < dim(); ++u) {
              const FieldElement& c = structure_[s][t][u];
              if (qps::is_zero(c)) continue;
              const FieldElement v = field_->mul(c, zp);
              for (std::size_t r = 0; r < fd; ++r)
                if (sgn(v[r]) != 0) cell.emplace_back(u * fd + r, v[r]);
            }
          }
  }

  std::string label_;
  std::shared_ptr<const GroundField> field_;
  std::vector<std::string> basis_;
  StructureTable structure_;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> flat_;
};

using AlgebraPtr = std::shared_ptr<const AlgebraPresentation>;

/// An element of a presented algebra.
struct AlgebraElement {
  AlgebraPtr algebra;
  Coeffs coeffs;

  static AlgebraElement basis(const AlgebraPtr& alg, std::size_t s) { return {alg, alg->basis_element(s)}; }
  static AlgebraElement unit(const AlgebraPtr& alg) { return {alg, alg->unit()}; }
  static AlgebraElement zero(const AlgebraPtr& alg) { return {alg, alg->zero()}; }

  bool is_zero() const { return qps::is_zero(coeffs); }
  bool operator==(const AlgebraElement& o) const { return algebra.get() == o.algebra.get() && coeffs == o.coeffs; }
};

namespace detail {
inline void require_same(const AlgebraElement& x, const AlgebraElement& y) {
  if (!x.algebra || x.algebra.get() != y.algebra.get()) throw EngineError("operands belong to different algebras");
}
}  // namespace detail

inline AlgebraElement operator+(const AlgebraElement& x, const AlgebraElement& y) {
  detail::require_same(x, y);
  AlgebraElement r = x;
  for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] += y.coeffs[i];
  return r;
}

inline AlgebraElement operator*(const FieldElement& c, const AlgebraElement& x) { return {x.algebra, x.algebra->scale(c, x.coeffs)}; }

inline AlgebraElement mul(const AlgebraElement& x, const AlgebraElement& y) {
  detail::require_same(x, y);
  return {x.algebra, x.algebra->mul(x.coeffs, y.coeffs)};
}

inline AlgebraElement inv(const AlgebraElement& x) { return {x.algebra, x.algebra->inverse(x.coeffs)}; }

/// The standard dual functional of the unit basis element.
inline FieldElement dual_unit_functional(const AlgebraElement& x) { return x.algebra->component(x.coeffs, 0); }

struct ConditionTwoReport {
  bool holds = true;
  /// First violating pair of basis indices (s, t), when the condition fails.
  std::optional<std::pair<std::size_t, std::size_t>> violation;
};

/// Checks e*(s t^{-1}) != 0 => s = t and e*(s^{-1} t) != 0 => s = t on all basis pairs.
inline ConditionTwoReport check_condition_2(const AlgebraPresentation& alg) {
  const std::size_t d = alg.dim();
  std::vector<Coeffs> inverses;
  inverses.reserve(d);
  for (std::size_t s = 0; s < d; ++s) inverses.push_back(alg.inverse(alg.basis_element(s)));
  for (std::size_t s = 0; s < d; ++s)
    for (std::size_t t = 0; t < d; ++t) {
      if (s == t) continue;
      const Coeffs st = alg.mul(alg.basis_element(s), inverses[t]);
      const Coeffs ts = alg.mul(inverses[s], alg.basis_element(t));
      if (!qps::is_zero(alg.component(st, 0)) || !qps::is_zero(alg.component(ts, 0))) return {false, std::make_pair(s, t)};
    }
  return {};
}

inline bool check_semi_multiplicative(const AlgebraPresentation& alg) {
  for (const auto& row : alg.structure())
    for (const auto& entry : row) {
      std::size_t nonzero = 0;
      for (const auto& c : entry)
        if (!qps::is_zero(c)) ++nonzero;
      if (nonzero > 1) return false;
    }
  return true;
}

inline bool check_associativity(const AlgebraPresentation& alg) {
  const std::size_t d = alg.dim();
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      const Coeffs ab = alg.mul(alg.basis_element(a), alg.basis_element(b));
      for (std::size_t c = 0; c < d; ++c) {
        const Coeffs bc = alg.mul(alg.basis_element(b), alg.basis_element(c));
        if (alg.mul(ab, alg.basis_element(c)) != alg.mul(alg.basis_element(a), bc)) return false;
      }
    }
  return true;
}

inline bool check_unit(const AlgebraPresentation& alg) {
  for (std::size_t s = 0; s < alg.dim(); ++s) {
    const Coeffs x = alg.basis_element(s);
    if (alg.mul(alg.unit(), x) != x || alg.mul(x, alg.unit()) != x) return false;
  }
  return true;
}

/// Every basis element has an invertible left-multiplication matrix.
inline bool check_basis_invertible(const AlgebraPresentation& alg) {
  for (std::size_t s = 0; s < alg.dim(); ++s)
    if (!is_invertible(alg.left_multiplication(alg.basis_element(s)))) return false;
  return true;
}

/// Presentation of the same algebra in a new basis. new_basis[i] is the i-th
/// new basis element written in the old basis; new_basis[0] must be the unit.
inline AlgebraPtr change_basis(const AlgebraPresentation& alg, const std::vector<Coeffs>& new_basis, std::vector<std::string> labels) {
  const std::size_t d = alg.dim();
  const GroundField& F = alg.field();
  const std::size_t fd = F.degree();
  if (new_basis.size() != d || labels.size() != d) throw EngineError("change_basis: wrong number of basis elements");
  if (new_basis[0] != alg.unit()) throw EngineError("change_basis: first new basis element must be the unit");
  // express old flat coordinates in the new basis: solve over Q with the
  // F-linear change written on the flat basis
  DenseMatrix m(alg.flat_dim());
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t q = 0; q < fd; ++q) {
      const Coeffs col = alg.scale(F.zeta_power(q), new_basis[j]);
      for (std::size_t i = 0; i < alg.flat_dim(); ++i) m.at(i, j * fd + q) = col[i];
    }
  if (!is_invertible(m)) throw EngineError("change_basis: new basis is not a basis");
  StructureTable sc(d, std::vector<std::vector<FieldElement>>(d, std::vector<FieldElement>(d, F.zero())));
  for (std::size_t s = 0; s < d; ++s)
    for (std::size_t t = 0; t < d; ++t) {
      auto coords = solve(m, alg.mul(new_basis[s], new_basis[t]));
      for (std::size_t u = 0; u < d; ++u)
        for (std::size_t p = 0; p < fd; ++p) sc[s][t][u][p] = (*coords)[u * fd + p];
    }
  return std::make_shared<const AlgebraPresentation>(alg.label(), alg.field_ptr(), std::move(labels), std::move(sc));
}

}  // namespace qps
