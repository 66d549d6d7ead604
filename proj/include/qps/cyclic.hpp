#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "qps/linalg.hpp"
#include "qps/series.hpp"

namespace qps {

namespace detail {

/// Index of the lexicographically least rotation of v.
template <typename T>
std::size_t least_rotation(const std::vector<T>& v) {
  const std::size_t n = v.size();
  std::size_t best = 0;
  for (std::size_t r = 1; r < n; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const T& x = v[(r + i) % n];
      const T& y = v[(best + i) % n];
      if (x < y) {
        best = r;
        break;
      }
      if (y < x) break;
    }
  }
  return best;
}

template <typename T>
std::vector<T> rotated(const std::vector<T>& v, std::size_t r) {
  std::vector<T> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(v[(r + i) % v.size()]);
  return out;
}

inline std::vector<std::uint32_t> arrow_sequence(const PathKey& k) {
  std::vector<std::uint32_t> out;
  out.reserve(k.degree());
  for (const auto& l : k.letters) out.push_back(l.arrow);
  return out;
}

inline std::vector<std::uint32_t> arrow_rotation_class(const PathKey& k) {
  auto seq = arrow_sequence(k);
  return rotated(seq, least_rotation(seq));
}

}  // namespace detail

/// Representative of f modulo the commutator subspace.
///
/// Non-cyclic words are dropped (they are commutators with idempotents). A
/// cyclic word's tail is moved in front of its first letter, which leaves a
/// scalar multiple of a unit-tail letter sequence, and the sequence is then
/// rotated to its least rotation. Unit-tail sequences modulo rotation are a
/// basis of the cyclic quotient in positive degree. Degree-0 terms are kept
/// as they are, which is exact for commutative D_i.
inline Series canonical_cyclic_form(const Series& f) {
  const SpeciesShape& shape = f.shape();
  Series out(f.shape_ptr(), f.truncation());
  for (const auto& [key, tail] : f.terms()) {
    if (f.end_vertex(key) != key.vertex) continue;
    if (key.letters.empty()) {
      out.add_term(key, tail);
      continue;
    }
    const AlgebraPresentation& dv = shape.algebra(key.vertex);
    const Letter first = key.letters.front();
    const Coeffs moved = dv.mul_basis_right(tail, first.basis);
    PathKey word = key;
    for (std::size_t u = 0; u < dv.dim(); ++u) {
      const FieldElement c = dv.component(moved, u);
      if (is_zero(c)) continue;
      word.letters.front().basis = static_cast<std::uint32_t>(u);
      PathKey rep{word.vertex, detail::rotated(word.letters, detail::least_rotation(word.letters))};
      rep.vertex = static_cast<std::uint32_t>(shape.arrow(rep.letters.front().arrow).source);
      out.add_term(rep, shape.algebra(rep.vertex).scalar(c));
    }
  }
  return out;
}

/// Exact membership of f in the commutator subspace [A, A], degree by degree.
///
/// In degree d the cyclic part of f is tested against the span of the cyclic
/// parts of [g, w], with g running over the F-basis of S and the unit-tail
/// letters, and w over the Q-basis of words. Commutators only mix words whose
/// arrow sequences are rotations of each other, so the span is built only for
/// the rotation classes that actually occur in f.
inline bool in_commutator_span(const Series& f) {
  const SpeciesShape& shape = f.shape();
  const unsigned n = f.truncation();
  const Series cyc = f.cyclic_part();
  if (cyc.is_zero()) return true;

  for (unsigned d = 0; d <= n; ++d) {
    const Series target = cyc.degree_component(d);
    if (target.is_zero()) continue;
    if (d == 0) {
      // [S, S] vanishes for commutative D_i; otherwise span D_v-commutators
      RowSpace span;
      std::map<PathKey, std::uint64_t> ids;
      auto encode = [&](const Series& s) {
        SparseVector v;
        for (const auto& [k, t] : s.terms()) {
          auto [it, _] = ids.emplace(k, ids.size());
          const std::uint64_t base = it->second * 4096;
          for (std::size_t i = 0; i < t.size(); ++i)
            if (!is_zero(t[i])) v[base + i] += t[i];
        }
        return v;
      };
      for (std::size_t v = 0; v < shape.vertex_count(); ++v) {
        const AlgebraPresentation& dv = shape.algebra(v);
        for (std::size_t a = 0; a < dv.flat_dim(); ++a)
          for (std::size_t b = 0; b < dv.flat_dim(); ++b) {
            Coeffs x(dv.flat_dim()), y(dv.flat_dim());
            x[a] = 1;
            y[b] = 1;
            Coeffs c = dv.mul(x, y);
            const Coeffs r = dv.mul(y, x);
            for (std::size_t i = 0; i < c.size(); ++i) c[i] -= r[i];
            span.insert(encode(Series::algebra_element(f.shape_ptr(), n, v, c)));
          }
      }
      if (!span.contains(encode(target))) return false;
      continue;
    }

    std::set<std::vector<std::uint32_t>> classes;
    for (const auto& [k, t] : target.terms()) classes.insert(detail::arrow_rotation_class(k));

    std::map<PathKey, std::uint64_t> ids;
    const std::uint64_t stride = 1ull << 20;
    auto encode = [&](const Series& s) {
      SparseVector v;
      for (const auto& [k, t] : s.terms()) {
        if (s.end_vertex(k) != k.vertex) continue;
        auto [it, _] = ids.emplace(k, ids.size());
        const std::uint64_t base = it->second * stride;
        for (std::size_t i = 0; i < t.size(); ++i)
          if (!is_zero(t[i])) v[base + i] = t[i];
      }
      return v;
    };

    RowSpace span;
    const auto shape_ptr = f.shape_ptr();
    auto add_commutator = [&](const Series& g, const Series& w) { span.insert(encode(g * w - w * g)); };

    // all words of degree m whose arrow sequence is a contiguous piece of a
    // rotation of one of the target classes
    auto words_in_classes = [&](unsigned m, bool need_cyclic) {
      std::set<std::vector<std::uint32_t>> seqs;
      for (const auto& cls : classes)
        for (std::size_t r = 0; r < cls.size(); ++r) {
          auto rot = detail::rotated(cls, r);
          rot.resize(m);
          seqs.insert(rot);
        }
      std::vector<PathKey> keys;
      for (const auto& seq : seqs) {
        if (need_cyclic && shape.arrow(seq.back()).target != shape.arrow(seq.front()).source) continue;
        std::vector<PathKey> partial{PathKey{static_cast<std::uint32_t>(shape.arrow(seq.front()).source), {}}};
        for (auto a : seq) {
          std::vector<PathKey> next;
          const std::size_t ds = shape.dim(shape.arrow(a).source);
          for (const auto& p : partial)
            for (std::size_t s = 0; s < ds; ++s) {
              PathKey q = p;
              q.letters.push_back({a, static_cast<std::uint32_t>(s)});
              next.push_back(std::move(q));
            }
          partial = std::move(next);
        }
        keys.insert(keys.end(), partial.begin(), partial.end());
      }
      return keys;
    };

    // [x, w] with x in the F-basis of D_v and w a cyclic word of degree d
    for (const auto& key : words_in_classes(d, true)) {
      const std::size_t v = key.vertex;
      const AlgebraPresentation& dv = shape.algebra(v);
      for (std::size_t u = 0; u < dv.flat_dim(); ++u) {
        Coeffs tail(dv.flat_dim());
        tail[u] = 1;
        const Series w = Series::word(shape_ptr, n, key, tail);
        for (std::size_t s = 0; s < dv.dim(); ++s) add_commutator(Series::algebra_element(shape_ptr, n, v, dv.basis_element(s)), w);
      }
    }
    // [l, w] with l a unit-tail letter and w a word of degree d - 1 closing it up
    std::set<Letter> letters;
    for (const auto& cls : classes)
      for (auto a : cls)
        for (std::size_t s = 0; s < shape.dim(shape.arrow(a).source); ++s) letters.insert({a, static_cast<std::uint32_t>(s)});
    std::vector<PathKey> rests;
    if (d == 1) {
      for (std::size_t v = 0; v < shape.vertex_count(); ++v) rests.push_back(PathKey{static_cast<std::uint32_t>(v), {}});
    } else {
      rests = words_in_classes(d - 1, false);
    }
    for (const Letter& l : letters) {
      const Arrow& arrow = shape.arrow(l.arrow);
      const Series g = Series::letter(shape_ptr, n, l.arrow, l.basis);
      for (const auto& key : rests) {
        if (key.vertex != arrow.target) continue;
        const std::size_t end = key.letters.empty() ? key.vertex : shape.arrow(key.letters.back().arrow).target;
        if (end != arrow.source) continue;
        const AlgebraPresentation& de = shape.algebra(end);
        for (std::size_t u = 0; u < de.flat_dim(); ++u) {
          Coeffs tail(de.flat_dim());
          tail[u] = 1;
          add_commutator(g, Series::word(shape_ptr, n, key, tail));
        }
      }
    }
    if (!span.contains(encode(target))) return false;
  }
  return true;
}

/// P - Q lies in the closure of the commutator subspace, up to degree N.
inline bool cyclically_equivalent(const Series& p, const Series& q) {
  p.require_compatible(q);
  return in_commutator_span(p - q);
}

/// Fast equivalence test through the canonical cyclic form.
inline bool cyclically_equivalent_canonical(const Series& p, const Series& q) {
  p.require_compatible(q);
  return canonical_cyclic_form(p - q).is_zero();
}

}  // namespace qps
