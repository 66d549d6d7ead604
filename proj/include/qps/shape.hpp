#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qps/algebra.hpp"
#include "qps/tower.hpp"

namespace qps {

/// A Z-free generator of M: a legible element of e_source M e_target.
/// Vertices are 0-based internally and 1-based in every external format.
struct Arrow {
  std::string label;
  std::size_t source;
  std::size_t target;

  bool operator==(const Arrow&) const = default;
};

/// The data (S, Z, M): one division algebra per vertex and the Z-local
/// generator set T of M_0. M is the S-bimodule freely induced from T.
class SpeciesShape {
 public:
  SpeciesShape(std::shared_ptr<const GroundField> field, std::vector<AlgebraPtr> algebras, std::vector<Arrow> arrows)
      : field_(std::move(field)), algebras_(std::move(algebras)), arrows_(std::move(arrows)) {
    if (algebras_.empty()) throw EngineError("a species needs at least one vertex");
    for (const auto& alg : algebras_) {
      if (!alg) throw EngineError("missing vertex algebra");
      if (!alg->field().same_as(*field_)) throw EngineError("algebra '" + alg->label() + "' is over a different ground field");
    }
    std::set<std::string> labels;
    for (const auto& a : arrows_) {
      if (a.source >= algebras_.size() || a.target >= algebras_.size())
        throw EngineError("arrow '" + a.label + "' has an endpoint outside 1.." + std::to_string(algebras_.size()));
      if (a.source == a.target) throw EngineError("arrow '" + a.label + "' is a loop; algebras with potential require M_cyc = 0");
      if (!labels.insert(a.label).second) throw EngineError("duplicate arrow label '" + a.label + "'");
      if (a.label.empty()) throw EngineError("empty arrow label");
    }
  }

  const GroundField& field() const { return *field_; }
  const std::shared_ptr<const GroundField>& field_ptr() const { return field_; }
  std::size_t vertex_count() const { return algebras_.size(); }
  const std::vector<AlgebraPtr>& algebras() const { return algebras_; }
  const AlgebraPresentation& algebra(std::size_t v) const { return *algebras_[v]; }
  const AlgebraPtr& algebra_ptr(std::size_t v) const { return algebras_[v]; }
  std::size_t dim(std::size_t v) const { return algebras_[v]->dim(); }
  const std::vector<Arrow>& arrows() const { return arrows_; }
  const Arrow& arrow(std::size_t i) const { return arrows_[i]; }

  std::optional<std::size_t> find_arrow(const std::string& label) const {
    for (std::size_t i = 0; i < arrows_.size(); ++i)
      if (arrows_[i].label == label) return i;
    return std::nullopt;
  }

  std::vector<std::size_t> arrows_between(std::size_t i, std::size_t j) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < arrows_.size(); ++a)
      if (arrows_[a].source == i && arrows_[a].target == j) out.push_back(a);
    return out;
  }

  /// dim_F e_i M e_j = d_i * |T cap e_i M_0 e_j| * d_j.
  std::size_t bimodule_f_dim(std::size_t i, std::size_t j) const { return dim(i) * arrows_between(i, j).size() * dim(j); }

  std::size_t total_f_dim() const {
    std::size_t total = 0;
    for (const auto& a : arrows_) total += dim(a.source) * dim(a.target);
    return total;
  }

  /// Pairs {i, j} with generators in both directions.
  std::vector<std::pair<std::size_t, std::size_t>> two_cycles() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < vertex_count(); ++i)
      for (std::size_t j = i + 1; j < vertex_count(); ++j)
        if (!arrows_between(i, j).empty() && !arrows_between(j, i).empty()) out.emplace_back(i, j);
    return out;
  }
  bool is_two_acyclic() const { return two_cycles().empty(); }

 private:
  std::shared_ptr<const GroundField> field_;
  std::vector<AlgebraPtr> algebras_;
  std::vector<Arrow> arrows_;
};

using ShapePtr = std::shared_ptr<const SpeciesShape>;

/// (dimension of e_i M e_j as a left D_i-module, as a right D_j-module).
inline std::pair<std::size_t, std::size_t> bimodule_dims(const SpeciesShape& shape, std::size_t i, std::size_t j) {
  const std::size_t count = shape.arrows_between(i, j).size();
  return {count * shape.dim(j), shape.dim(i) * count};
}

/// Skew-symmetrizable integer matrix B with its skew-symmetrizer D.
struct ExchangeMatrix {
  std::vector<std::vector<long long>> b;
  std::vector<long long> d;

  std::size_t size() const { return b.size(); }
  bool operator==(const ExchangeMatrix&) const = default;

  /// Throws unless B is square, has zero diagonal and D*B is skew-symmetric
  /// with positive D.
  void validate() const {
    const std::size_t n = b.size();
    if (d.size() != n) throw EngineError("skew-symmetrizer has the wrong size");
    for (const auto& row : b)
      if (row.size() != n) throw EngineError("exchange matrix is not square");
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] <= 0) throw EngineError("skew-symmetrizer entries must be positive");
      if (b[i][i] != 0) throw EngineError("exchange matrix has a nonzero diagonal entry");
      for (std::size_t j = 0; j < n; ++j)
        if (d[i] * b[i][j] != -d[j] * b[j][i])
          throw EngineError("D*B is not skew-symmetric at (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    }
  }
};

inline ExchangeMatrix exchange_matrix(const SpeciesShape& shape) {
  const std::size_t n = shape.vertex_count();
  if (auto cycles = shape.two_cycles(); !cycles.empty())
    throw PreconditionError("exchange matrix undefined: 2-cycle between vertices " + std::to_string(cycles.front().first + 1) + " and " +
                            std::to_string(cycles.front().second + 1));
  ExchangeMatrix m;
  m.b.assign(n, std::vector<long long>(n, 0));
  m.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.d[i] = static_cast<long long>(shape.dim(i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto [left, right] = bimodule_dims(shape, i, j);
      if (left == 0) continue;
      m.b[i][j] = static_cast<long long>(left);
      m.b[j][i] = -static_cast<long long>(right);
    }
  return m;
}

/// Fomin-Zelevinsky mutation of B at vertex k (0-based).
inline ExchangeMatrix matrix_mutation(const ExchangeMatrix& m, std::size_t k) {
  const std::size_t n = m.size();
  if (k >= n) throw EngineError("mutation vertex out of range");
  ExchangeMatrix out = m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == k || j == k) {
        out.b[i][j] = -m.b[i][j];
        continue;
      }
      const long long p = m.b[i][k] * m.b[k][j];
      if (p > 0) out.b[i][j] = m.b[i][j] + (m.b[i][k] > 0 ? p : -p);
    }
  return out;
}

namespace detail {

inline std::vector<std::pair<unsigned, unsigned>> factorize(unsigned long long n) {
  std::vector<std::pair<unsigned, unsigned>> out;
  for (unsigned q = 2; static_cast<unsigned long long>(q) * q <= n; ++q) {
    unsigned e = 0;
    while (n % q == 0) {
      n /= q;
      ++e;
    }
    if (e > 0) out.emplace_back(q, e);
  }
  if (n > 1) out.emplace_back(static_cast<unsigned>(n), 1);
  return out;
}

}  // namespace detail

struct RealizeOptions {
  /// When set, every d_i must be a power of this order and the towers use
  /// order-th roots over Q(zeta_order). Otherwise d_i is factored into prime
  /// powers over Q(zeta_lcm).
  std::optional<unsigned> order;
};

/// Species realization of B by radical towers over a cyclotomic field.
///
/// Vertex i carries a commutative field extension of dimension d_i; each
/// positive b_ij gives b_ij / d_j generators i -> j.
inline SpeciesShape realize_matrix(const ExchangeMatrix& m, const RealizeOptions& options = {}) {
  m.validate();
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m.b[i][j] % m.d[j] != 0)
        throw EngineError("d_" + std::to_string(j + 1) + " = " + std::to_string(m.d[j]) + " does not divide b_" + std::to_string(i + 1) +
                          std::to_string(j + 1) + " = " + std::to_string(m.b[i][j]));

  // root orders per vertex
  std::vector<std::vector<unsigned>> root_orders(n);
  unsigned field_order = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (options.order) {
      const unsigned q = *options.order;
      if (q < 2) throw EngineError("cyclotomic order must be at least 2");
      long long rest = m.d[i];
      while (rest > 1 && rest % q == 0) {
        rest /= q;
        root_orders[i].push_back(q);
      }
      if (rest != 1)
        throw EngineError("d_" + std::to_string(i + 1) + " = " + std::to_string(m.d[i]) + " is not a power of " + std::to_string(q));
    } else {
      for (auto [q, e] : detail::factorize(static_cast<unsigned long long>(m.d[i])))
        for (unsigned k = 0; k < e; ++k) root_orders[i].push_back(q);
    }
    for (unsigned q : root_orders[i]) field_order = std::lcm(field_order, q);
  }
  if (options.order) field_order = std::max(field_order, *options.order);
  auto field = field_order <= 1 ? GroundField::rationals() : GroundField::cyclotomic(field_order);

  std::vector<AlgebraPtr> algebras;
  unsigned long next_prime = 2;
  auto fresh_prime = [&] {
    while (!is_prime(next_prime) || field_order % next_prime == 0) ++next_prime;
    return next_prime++;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::string label = "D" + std::to_string(i + 1);
    if (root_orders[i].empty()) {
      algebras.push_back(AlgebraPresentation::ground(label, field));
      continue;
    }
    std::vector<Radical> radicals;
    for (unsigned q : root_orders[i]) radicals.push_back({q, fresh_prime()});
    algebras.push_back(build_radical_algebra(label, field, radicals));
  }

  std::vector<Arrow> arrows;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (m.b[i][j] <= 0) continue;
      const long long count = m.b[i][j] / m.d[j];
      for (long long c = 0; c < count; ++c) {
        std::string label = "a" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
        if (count > 1) label += "_" + std::to_string(c + 1);
        arrows.push_back({label, i, j});
      }
    }
  return SpeciesShape(field, std::move(algebras), std::move(arrows));
}

/// Shape with the given arrows removed; old_to_new maps surviving indices.
inline SpeciesShape remove_arrows(const SpeciesShape& shape, const std::set<std::size_t>& removed, std::vector<std::optional<std::size_t>>* old_to_new = nullptr) {
  std::vector<Arrow> kept;
  std::vector<std::optional<std::size_t>> map(shape.arrows().size());
  for (std::size_t a = 0; a < shape.arrows().size(); ++a) {
    if (removed.count(a)) continue;
    map[a] = kept.size();
    kept.push_back(shape.arrow(a));
  }
  if (old_to_new) *old_to_new = std::move(map);
  return SpeciesShape(shape.field_ptr(), shape.algebras(), std::move(kept));
}

}  // namespace qps
