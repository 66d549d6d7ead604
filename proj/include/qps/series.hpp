#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "qps/shape.hpp"

namespace qps {

/// Right S-local basis letter s*a with s in L(source(a)).
struct Letter {
  std::uint32_t arrow;
  std::uint32_t basis;

  auto operator<=>(const Letter&) const = default;
};

/// Letter sequence of a word together with its start vertex. The empty
/// sequence at vertex v indexes the degree-0 component e_v S.
struct PathKey {
  std::uint32_t vertex = 0;
  std::vector<Letter> letters;

  std::size_t degree() const { return letters.size(); }
  bool operator==(const PathKey&) const = default;
  bool operator<(const PathKey& o) const {
    if (letters.size() != o.letters.size()) return letters.size() < o.letters.size();
    if (vertex != o.vertex) return vertex < o.vertex;
    return letters < o.letters;
  }
};

/// Default truncation degree of the adic approximation.
inline constexpr unsigned kDefaultTruncation = 10;

/// An element of F_S(M) modulo words of length > N, in right-normal form:
/// a map from letter sequences to tails in D_end. Stored terms never have a
/// zero tail and never exceed the truncation degree.
class Series {
 public:
  using TermMap = std::map<PathKey, Coeffs>;

  /// Placeholder without a shape; only assignment is meaningful.
  Series() = default;

  Series(ShapePtr shape, unsigned truncation) : shape_(std::move(shape)), truncation_(truncation) {
    if (!shape_) throw EngineError("series without a shape");
  }

  static Series zero(ShapePtr shape, unsigned n) { return Series(std::move(shape), n); }

  static Series algebra_element(ShapePtr shape, unsigned n, std::size_t v, Coeffs x) {
    Series s(std::move(shape), n);
    s.add_term(PathKey{static_cast<std::uint32_t>(v), {}}, x);
    return s;
  }
  static Series idempotent(ShapePtr shape, unsigned n, std::size_t v) {
    const Coeffs unit = shape->algebra(v).unit();
    return algebra_element(std::move(shape), n, v, unit);
  }
  /// c * 1 where 1 = sum of all idempotents.
  static Series scalar(ShapePtr shape, unsigned n, const FieldElement& c) {
    Series s(shape, n);
    for (std::size_t v = 0; v < shape->vertex_count(); ++v) s.add_term(PathKey{static_cast<std::uint32_t>(v), {}}, shape->algebra(v).scalar(c));
    return s;
  }
  static Series one(ShapePtr shape, unsigned n) {
    const FieldElement c = shape->field().one();
    return scalar(std::move(shape), n, c);
  }
  static Series letter(ShapePtr shape, unsigned n, std::size_t arrow, std::size_t basis) {
    const Arrow& a = shape->arrow(arrow);
    const Coeffs unit = shape->algebra(a.target).unit();
    Series s(shape, n);
    s.add_term(PathKey{static_cast<std::uint32_t>(a.source), {Letter{static_cast<std::uint32_t>(arrow), static_cast<std::uint32_t>(basis)}}},
               unit);
    return s;
  }
  static Series generator(ShapePtr shape, unsigned n, std::size_t arrow) { return letter(std::move(shape), n, arrow, 0); }
  static Series word(ShapePtr shape, unsigned n, PathKey key, Coeffs tail) {
    Series s(std::move(shape), n);
    s.add_term(key, tail);
    return s;
  }

  const SpeciesShape& shape() const { return *shape_; }
  const ShapePtr& shape_ptr() const { return shape_; }
  unsigned truncation() const { return truncation_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  std::size_t end_vertex(const PathKey& k) const {
    return k.letters.empty() ? k.vertex : shape_->arrow(k.letters.back().arrow).target;
  }

  /// Accumulates tail onto the term at key, dropping it when it cancels.
  void add_term(const PathKey& key, const Coeffs& tail) {
    if (key.degree() > truncation_ || qps::is_zero(tail)) return;
    if (tail.size() != shape_->algebra(end_vertex(key)).flat_dim()) throw EngineError("tail does not live in the end-vertex algebra");
    auto [it, inserted] = terms_.try_emplace(key, tail);
    if (inserted) return;
    for (std::size_t i = 0; i < tail.size(); ++i) it->second[i] += tail[i];
    if (qps::is_zero(it->second)) terms_.erase(it);
  }

  /// Accumulates (k1 * t1) * (k2 * t2): t1 is absorbed into the leading
  /// letter of the second word by re-expanding t1 * s in L(source).
  void add_product(const PathKey& k1, const Coeffs& t1, const PathKey& k2, const Coeffs& t2) {
    const std::size_t mid = end_vertex(k1);
    if (mid != k2.vertex) return;
    if (k1.degree() + k2.degree() > truncation_) return;
    const AlgebraPresentation& dm = shape_->algebra(mid);
    if (k2.letters.empty()) {
      add_term(k1, dm.mul(t1, t2));
      return;
    }
    const Letter first = k2.letters.front();
    const Coeffs moved = dm.mul_basis_right(t1, first.basis);
    const AlgebraPresentation& de = shape_->algebra(end_vertex(k2));
    PathKey key;
    key.vertex = k1.vertex;
    key.letters.reserve(k1.degree() + k2.degree());
    key.letters = k1.letters;
    key.letters.push_back(first);
    key.letters.insert(key.letters.end(), k2.letters.begin() + 1, k2.letters.end());
    const std::size_t slot = k1.degree();
    for (std::size_t v = 0; v < dm.dim(); ++v) {
      const FieldElement c = dm.component(moved, v);
      if (qps::is_zero(c)) continue;
      key.letters[slot].basis = static_cast<std::uint32_t>(v);
      add_term(key, de.scale(c, t2));
    }
  }

  Series& operator+=(const Series& o) {
    require_compatible(o);
    for (const auto& [k, t] : o.terms_) add_term(k, t);
    return *this;
  }
  Series& operator-=(const Series& o) {
    require_compatible(o);
    for (const auto& [k, t] : o.terms_) {
      Coeffs neg = t;
      for (auto& q : neg) q = -q;
      add_term(k, neg);
    }
    return *this;
  }
  Series operator-() const {
    Series r(shape_, truncation_);
    return r -= *this;
  }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator*(const Series& f, const Series& g) {
    f.require_compatible(g);
    Series out(f.shape_, f.truncation_);
    for (const auto& [k1, t1] : f.terms_)
      for (const auto& [k2, t2] : g.terms_) out.add_product(k1, t1, k2, t2);
    return out;
  }

  /// c * f for a ground-field scalar c.
  Series scaled(const FieldElement& c) const {
    Series out(shape_, truncation_);
    for (const auto& [k, t] : terms_) out.add_term(k, shape_->algebra(end_vertex(k)).scale(c, t));
    return out;
  }
  Series scaled(const Rational& q) const { return scaled(shape_->field().from_rational(q)); }

  Series degree_component(unsigned d) const {
    if (d > truncation_) throw EngineError("degree " + std::to_string(d) + " exceeds the truncation degree " + std::to_string(truncation_));
    Series out(shape_, truncation_);
    for (const auto& [k, t] : terms_)
      if (k.degree() == d) out.terms_.emplace(k, t);
    return out;
  }

  /// Drops all words longer than d; the truncation bound is unchanged.
  Series truncated(unsigned d) const {
    Series out(shape_, truncation_);
    for (const auto& [k, t] : terms_)
      if (k.degree() <= d) out.terms_.emplace(k, t);
    return out;
  }

  /// Same element viewed with a different truncation bound.
  Series with_truncation(unsigned n) const {
    Series out(shape_, n);
    for (const auto& [k, t] : terms_)
      if (k.degree() <= n) out.terms_.emplace(k, t);
    return out;
  }

  /// sum_j e_j f e_j
  Series cyclic_part() const {
    Series out(shape_, truncation_);
    for (const auto& [k, t] : terms_)
      if (end_vertex(k) == k.vertex) out.terms_.emplace(k, t);
    return out;
  }

  bool is_cyclic() const {
    for (const auto& [k, t] : terms_)
      if (end_vertex(k) != k.vertex) return false;
    return true;
  }

  std::optional<std::size_t> lowest_degree() const {
    std::optional<std::size_t> low;
    for (const auto& [k, t] : terms_)
      if (!low || k.degree() < *low) low = k.degree();
    return low;
  }
  std::size_t max_degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.degree(); }

  bool operator==(const Series& o) const { return truncation_ == o.truncation_ && terms_ == o.terms_; }

  void require_compatible(const Series& o) const {
    if (shape_.get() != o.shape_.get()) throw EngineError("series belong to different species shapes");
    if (truncation_ != o.truncation_) throw EngineError("series have different truncation degrees");
  }

  /// Raw access for internal builders that already hold normalized terms.
  TermMap& mutable_terms() { return terms_; }

 private:
  ShapePtr shape_;
  unsigned truncation_ = 0;
  TermMap terms_;
};

/// Factor of a raw (unnormalized) product: an element of D_v or a generator.
struct AlgebraFactor {
  std::size_t vertex;
  Coeffs element;
};
struct ArrowFactor {
  std::size_t arrow;
};
using RawFactor = std::variant<AlgebraFactor, ArrowFactor>;

struct RawTerm {
  FieldElement coeff;
  std::vector<RawFactor> factors;
};

/// Canonical series of a sum of raw products. Coefficients are pushed to the
/// right through the letters, like words are merged, zero tails dropped and
/// words beyond the truncation degree discarded.
inline Series normalize(const ShapePtr& shape, unsigned n, const std::vector<RawTerm>& raw) {
  Series out(shape, n);
  for (const auto& term : raw) {
    if (term.factors.empty()) {
      out += Series::scalar(shape, n, term.coeff);
      continue;
    }
    std::optional<std::size_t> end;
    Series product(shape, n);
    bool first = true;
    for (const auto& f : term.factors) {
      Series factor(shape, n);
      std::size_t start = 0, stop = 0;
      if (const auto* alg = std::get_if<AlgebraFactor>(&f)) {
        if (alg->vertex >= shape->vertex_count() || alg->element.size() != shape->algebra(alg->vertex).flat_dim())
          throw EngineError("malformed algebra factor");
        start = stop = alg->vertex;
        factor = Series::algebra_element(shape, n, alg->vertex, alg->element);
      } else {
        const std::size_t a = std::get<ArrowFactor>(f).arrow;
        if (a >= shape->arrows().size()) throw EngineError("unknown arrow index");
        start = shape->arrow(a).source;
        stop = shape->arrow(a).target;
        factor = Series::generator(shape, n, a);
      }
      if (end && *end != start) throw PreconditionError("path-incompatible raw word");
      end = stop;
      product = first ? factor : product * factor;
      first = false;
    }
    out += product.scaled(term.coeff);
  }
  return out;
}

}  // namespace qps
