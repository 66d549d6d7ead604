#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <tuple>
#include <vector>

#include "qps/cyclic.hpp"
#include "qps/linalg.hpp"
#include "qps/series.hpp"

namespace qps {

/// Element of A (x)_Z A. A left factor is a letter sequence with an F-basis
/// element of L(end) as tail; ground-field scalars always sit on the right
/// factor, which is the only normal form compatible with Z-balance.
class BiTensor {
 public:
  struct Key {
    PathKey left;
    std::uint32_t left_basis;
    PathKey right;

    bool operator<(const Key& o) const {
      if (left < o.left) return true;
      if (o.left < left) return false;
      if (left_basis != o.left_basis) return left_basis < o.left_basis;
      return right < o.right;
    }
    bool operator==(const Key&) const = default;
  };
  using TermMap = std::map<Key, Coeffs>;

  BiTensor(ShapePtr shape, unsigned truncation) : shape_(std::move(shape)), truncation_(truncation) {}

  const TermMap& terms() const { return terms_; }
  const ShapePtr& shape_ptr() const { return shape_; }
  unsigned truncation() const { return truncation_; }
  bool is_zero() const { return terms_.empty(); }

  void add_term(const Key& key, const Coeffs& right_tail) {
    if (qps::is_zero(right_tail)) return;
    auto [it, inserted] = terms_.try_emplace(key, right_tail);
    if (inserted) return;
    for (std::size_t i = 0; i < right_tail.size(); ++i) it->second[i] += right_tail[i];
    if (qps::is_zero(it->second)) terms_.erase(it);
  }

  /// Adds (left_key * left_tail) (x) (right_key * right_tail), expanding the
  /// left tail in L(end) and moving its F-coefficients across.
  void add_pair(const PathKey& left_key, const Coeffs& left_tail, const PathKey& right_key, const Coeffs& right_tail, bool negate = false) {
    const SpeciesShape& shape = *shape_;
    const std::size_t lend = left_key.letters.empty() ? left_key.vertex : shape.arrow(left_key.letters.back().arrow).target;
    if (lend != right_key.vertex) return;
    const AlgebraPresentation& dl = shape.algebra(lend);
    const std::size_t rend = right_key.letters.empty() ? right_key.vertex : shape.arrow(right_key.letters.back().arrow).target;
    const AlgebraPresentation& dr = shape.algebra(rend);
    for (std::size_t u = 0; u < dl.dim(); ++u) {
      FieldElement c = dl.component(left_tail, u);
      if (qps::is_zero(c)) continue;
      if (negate) c = shape.field().neg(c);
      add_term(Key{left_key, static_cast<std::uint32_t>(u), right_key}, dr.scale(c, right_tail));
    }
  }

  /// t * g, multiplying g onto the right factor.
  BiTensor times_right(const Series& g) const {
    BiTensor out(shape_, truncation_);
    Series scratch(shape_, truncation_);
    for (const auto& [key, tail] : terms_) {
      scratch.mutable_terms().clear();
      for (const auto& [k2, t2] : g.terms()) scratch.add_product(key.right, tail, k2, t2);
      for (const auto& [k, t] : scratch.terms()) {
        if (key.left.degree() + k.degree() > truncation_) continue;
        out.add_term(Key{key.left, key.left_basis, k}, t);
      }
    }
    return out;
  }

 private:
  ShapePtr shape_;
  unsigned truncation_;
  TermMap terms_;
};

/// The derivation Delta: A -> A (x)_Z A with Delta(s) = 1(x)s - s(x)1 and
/// Delta(m) = 1(x)m on generators. On a word l_1..l_m y every letter gives
/// 1 (x) l, so Delta(w) = sum_p (l_1..l_p) (x) (l_{p+1}..l_m y) - w (x) 1.
inline BiTensor delta_bimodule(const Series& f) {
  const SpeciesShape& shape = f.shape();
  BiTensor out(f.shape_ptr(), f.truncation());
  for (const auto& [key, tail] : f.terms()) {
    const std::size_t end = f.end_vertex(key);
    const AlgebraPresentation& de = shape.algebra(end);
    for (std::size_t p = 0; p <= key.degree(); ++p) {
      PathKey left{key.vertex, std::vector<Letter>(key.letters.begin(), key.letters.begin() + static_cast<std::ptrdiff_t>(p))};
      PathKey right;
      right.vertex = static_cast<std::uint32_t>(p == 0 ? key.vertex : shape.arrow(key.letters[p - 1].arrow).target);
      right.letters.assign(key.letters.begin() + static_cast<std::ptrdiff_t>(p), key.letters.end());
      out.add_pair(left, shape.algebra(right.vertex).unit(), right, tail);
    }
    out.add_pair(key, tail, PathKey{static_cast<std::uint32_t>(end), {}}, de.unit(), true);
  }
  return out;
}

/// u(f (x) g) = sum_i e_i g f e_i.
inline Series u_map(const BiTensor& t) {
  Series out(t.shape_ptr(), t.truncation());
  const SpeciesShape& shape = *t.shape_ptr();
  for (const auto& [key, tail] : t.terms()) {
    const std::size_t lend = key.left.letters.empty() ? key.left.vertex : shape.arrow(key.left.letters.back().arrow).target;
    const Coeffs lt = shape.algebra(lend).basis_element(key.left_basis);
    Series prod(t.shape_ptr(), t.truncation());
    prod.add_product(key.right, tail, key.left, lt);
    for (const auto& [k, c] : prod.terms())
      if (prod.end_vertex(k) == k.vertex) out.add_term(k, c);
  }
  return out;
}

/// h(f)(g) = u(Delta(f) g).
inline Series cyclic_derivation(const Series& f, const Series& g) {
  f.require_compatible(g);
  return u_map(delta_bimodule(f).times_right(g));
}

/// delta(f) = h(f)(1): the sum of the cyclic rotations l_{p+1}..l_m y l_1..l_p.
inline Series cyclic_derivative(const Series& f) { return cyclic_derivation(f, Series::one(f.shape_ptr(), f.truncation())); }

/// A dual basis functional: (s a)* of the right local basis {s a}, or *(a t)
/// of the left local basis {a t}.
struct DualFunctional {
  enum class Side { Right, Left };
  Side side = Side::Right;
  std::size_t arrow = 0;
  std::size_t basis = 0;
};

/// Evaluates psi on the letter (s a) = s (x) a (x) 1. Right duals return an
/// element of D_target, left duals an element of D_source.
inline Coeffs evaluate_dual(const SpeciesShape& shape, const DualFunctional& psi, const Letter& letter) {
  const Arrow& a = shape.arrow(psi.arrow);
  if (psi.side == DualFunctional::Side::Right) {
    const AlgebraPresentation& dt = shape.algebra(a.target);
    return letter.arrow == psi.arrow && letter.basis == psi.basis ? dt.unit() : dt.zero();
  }
  // s a = s . (a e) in the left basis {a t}
  const AlgebraPresentation& ds = shape.algebra(a.source);
  return letter.arrow == psi.arrow && psi.basis == 0 ? ds.basis_element(letter.basis) : ds.zero();
}

/// psi_*(m_1 ... m_l) = psi(m_1) m_2 ... m_l, for a right dual psi.
inline Series psi_star(const DualFunctional& psi, const Series& f) {
  if (psi.side != DualFunctional::Side::Right) throw PreconditionError("psi_* is defined for right S-linear functionals only");
  const SpeciesShape& shape = f.shape();
  Series out(f.shape_ptr(), f.truncation());
  for (const auto& [key, tail] : f.terms()) {
    if (key.letters.empty()) continue;
    const Letter& first = key.letters.front();
    if (first.arrow != psi.arrow || first.basis != psi.basis) continue;
    PathKey rest{static_cast<std::uint32_t>(shape.arrow(first.arrow).target), std::vector<Letter>(key.letters.begin() + 1, key.letters.end())};
    out.add_term(rest, tail);
  }
  return out;
}

inline Series delta_psi(const DualFunctional& psi, const Series& f) { return psi_star(psi, cyclic_derivative(f)); }

/// X_{a*}(P) = sum_{s in L(source a)} delta_{(s a)*}(P) s, one per arrow.
inline std::vector<Series> jacobian_generators(const Series& p) {
  const SpeciesShape& shape = p.shape();
  const Series dp = cyclic_derivative(p);
  std::vector<Series> out;
  out.reserve(shape.arrows().size());
  for (std::size_t a = 0; a < shape.arrows().size(); ++a) {
    const std::size_t src = shape.arrow(a).source;
    Series x(p.shape_ptr(), p.truncation());
    for (std::size_t s = 0; s < shape.dim(src); ++s) {
      const Series part = psi_star(DualFunctional{DualFunctional::Side::Right, a, s}, dp);
      x += part * Series::algebra_element(p.shape_ptr(), p.truncation(), src, shape.algebra(src).basis_element(s));
    }
    out.push_back(std::move(x));
  }
  return out;
}

/// dim_F of e_i M^{(x)d} e_j summed over i, j, for d = 0..up_to.
inline std::vector<std::size_t> free_graded_dims(const SpeciesShape& shape, unsigned up_to) {
  const std::size_t n = shape.vertex_count();
  std::vector<std::size_t> dims;
  // c[v]: number of letter sequences of the current length ending at v
  std::vector<std::size_t> c(n, 0);
  std::size_t d0 = 0;
  for (std::size_t v = 0; v < n; ++v) d0 += shape.dim(v);
  dims.push_back(d0);
  for (std::size_t v = 0; v < n; ++v) c[v] = 1;
  for (unsigned d = 1; d <= up_to; ++d) {
    std::vector<std::size_t> next(n, 0);
    for (const auto& a : shape.arrows()) next[a.target] += c[a.source] * shape.dim(a.source);
    c = std::move(next);
    std::size_t total = 0;
    for (std::size_t v = 0; v < n; ++v) total += c[v] * shape.dim(v);
    dims.push_back(total);
  }
  return dims;
}

/// Graded dimensions of the Jacobian algebra: for each d <= up_to, dim_F of
/// the degree-d piece of the associated graded of F_S(M) / R(P), that is
/// m^d / (m^{d+1} + R(P) cap m^d), computed modulo m^{up_to+1}.
///
/// The ideal is spanned by closing the generators X_{a*}(P) under left and
/// right multiplication by the F-basis of S, zeta, and the letters; a row
/// space whose columns are ordered by degree turns leading columns into
/// leading forms.
inline std::vector<std::size_t> jacobian_graded_dims(const Series& p, unsigned up_to) {
  if (up_to > p.truncation())
    throw EngineError("depth " + std::to_string(up_to) + " exceeds the truncation degree " + std::to_string(p.truncation()));
  const SpeciesShape& shape = p.shape();
  const GroundField& field = shape.field();
  const std::size_t fd = field.degree();
  std::vector<std::size_t> dims = free_graded_dims(shape, up_to);

  const Series truncated = p.truncated(up_to + 1);
  std::vector<Series> gens;
  for (auto& x : jacobian_generators(truncated)) {
    Series t = x.with_truncation(up_to);
    if (!t.is_zero()) gens.push_back(std::move(t));
  }
  if (gens.empty()) return dims;
  const ShapePtr& sp = p.shape_ptr();

  std::size_t stride = 1;
  for (const auto& alg : shape.algebras()) stride = std::max(stride, alg->flat_dim());
  std::map<PathKey, std::uint64_t> ids;
  auto encode = [&](const Series& s) {
    SparseVector v;
    for (const auto& [k, t] : s.terms()) {
      auto [it, _] = ids.emplace(k, ids.size());
      const std::uint64_t base = (static_cast<std::uint64_t>(k.degree()) << 44) | (it->second * stride);
      for (std::size_t i = 0; i < t.size(); ++i)
        if (!is_zero(t[i])) v[base + i] = t[i];
    }
    return v;
  };

  // Seeds x g y zeta^q; the span of the closure is then F-stable, so left
  // multiplication by letters absorbs any S-coefficient on the left, and only
  // right multiplication needs S separately (tails after the last letter).
  std::vector<Series> s_basis, letters;
  for (std::size_t v = 0; v < shape.vertex_count(); ++v)
    for (std::size_t s = 0; s < shape.dim(v); ++s) s_basis.push_back(Series::algebra_element(sp, up_to, v, shape.algebra(v).basis_element(s)));
  for (std::size_t a = 0; a < shape.arrows().size(); ++a)
    for (std::size_t s = 0; s < shape.dim(shape.arrow(a).source); ++s) letters.push_back(Series::letter(sp, up_to, a, s));

  RowSpace span;
  std::deque<Series> queue;
  auto offer = [&](Series s) {
    if (s.is_zero()) return;
    if (span.insert(encode(s))) queue.push_back(std::move(s));
  };
  for (const auto& g : gens)
    for (const auto& x : s_basis)
      for (const auto& y : s_basis) {
        const Series xgy = x * g * y;
        for (std::size_t q = 0; q < fd; ++q) offer(xgy.scaled(field.zeta_power(q)));
      }
  while (!queue.empty()) {
    Series s = std::move(queue.front());
    queue.pop_front();
    for (const auto& l : letters) {
      offer(l * s);
      offer(s * l);
    }
    for (const auto& y : s_basis) offer(s * y);
  }
  std::vector<std::size_t> leading(up_to + 1, 0);
  for (auto piv : span.pivots()) ++leading[piv >> 44];
  for (unsigned d = 0; d <= up_to; ++d) dims[d] -= leading[d] / fd;
  return dims;
}

}  // namespace qps
