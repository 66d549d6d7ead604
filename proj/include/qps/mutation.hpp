#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "qps/calculus.hpp"
#include "qps/cyclic.hpp"
#include "qps/substitution.hpp"

namespace qps {

namespace detail {

inline std::string letter_text(const SpeciesShape& shape, const Letter& l) {
  const Arrow& a = shape.arrow(l.arrow);
  if (l.basis == 0) return a.label;
  return shape.algebra(a.source).basis_labels()[l.basis] + "." + a.label;
}

inline std::string word_text(const SpeciesShape& shape, const PathKey& k) {
  if (k.letters.empty()) return "e" + std::to_string(k.vertex + 1);
  std::string out;
  for (const auto& l : k.letters) {
    if (!out.empty()) out += "*";
    out += letter_text(shape, l);
  }
  return out;
}

}  // namespace detail

struct TwoAcyclicReport {
  bool ok = true;
  std::string diagnostic;
  /// 1-based vertex pair of the first 2-cycle through k, when there is one.
  std::optional<std::pair<std::size_t, std::size_t>> cycle;
};

/// The degree-2 cyclic part of P through k vanishes and no pair of
/// generators forms a 2-cycle through k.
inline TwoAcyclicReport check_two_acyclic_at(const Series& p, std::size_t k) {
  const SpeciesShape& shape = p.shape();
  if (k >= shape.vertex_count()) throw EngineError("vertex " + std::to_string(k + 1) + " out of range");
  TwoAcyclicReport report;
  for (std::size_t i = 0; i < shape.vertex_count(); ++i) {
    if (i == k) continue;
    const auto in = shape.arrows_between(i, k);
    const auto out = shape.arrows_between(k, i);
    if (!in.empty() && !out.empty()) {
      report.ok = false;
      report.cycle = std::make_pair(std::min(i, k) + 1, std::max(i, k) + 1);
      report.diagnostic = "2-cycle through vertex " + std::to_string(k + 1) + ": " + shape.arrow(out.front()).label + " (" +
                          std::to_string(k + 1) + "->" + std::to_string(i + 1) + ") and " + shape.arrow(in.front()).label + " (" +
                          std::to_string(i + 1) + "->" + std::to_string(k + 1) + ")";
      return report;
    }
  }
  const Series two = canonical_cyclic_form(p).degree_component(2);
  for (const auto& [key, tail] : two.terms()) {
    const std::size_t mid = shape.arrow(key.letters.front().arrow).target;
    if (key.vertex == k || mid == k) {
      report.ok = false;
      report.diagnostic = "degree-2 cyclic term " + detail::word_text(shape, key) + " passes through vertex " + std::to_string(k + 1);
      return report;
    }
  }
  return report;
}

/// A cyclically equivalent potential with e_k P e_k = 0: the canonical form
/// with every word that starts at k rotated by one letter.
inline Series rotate_away_from(const Series& p, std::size_t k) {
  const Series canon = canonical_cyclic_form(p);
  Series out(p.shape_ptr(), p.truncation());
  for (const auto& [key, tail] : canon.terms()) {
    if (key.vertex != k || key.letters.empty()) {
      out.add_term(key, tail);
      continue;
    }
    PathKey r{static_cast<std::uint32_t>(p.shape().arrow(key.letters.front().arrow).target), detail::rotated(key.letters, 1)};
    // tails are scalars, so they live in every D_v alike
    const AlgebraPresentation& dv = p.shape().algebra(key.vertex);
    out.add_term(r, p.shape().algebra(r.vertex).scalar(dv.component(tail, 0)));
  }
  return out;
}

/// Output of the premutation mu_k: the new shape, the index maps from old
/// generators to new ones and mu_k P.
struct Premutation {
  std::size_t k = 0;
  ShapePtr base;
  ShapePtr shape;
  Series potential;
  std::vector<std::optional<std::size_t>> kept;
  /// (incoming b, t in L(k), outgoing a) -> [b t a]
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> composite;
  /// outgoing a -> a*  (runs target(a) -> k)
  std::map<std::size_t, std::size_t> right_dual;
  /// incoming b -> *b  (runs k -> source(b))
  std::map<std::size_t, std::size_t> left_dual;
};

inline std::string composite_label(const std::string& b, const std::string& t, const std::string& a) { return "[" + b + "." + t + "." + a + "]"; }
inline std::string right_dual_label(const std::string& a) { return "[" + a + "*]"; }
inline std::string left_dual_label(const std::string& b) { return "[*" + b + "]"; }

/// mu_k P = [P] + sum [b t s a] (s a)* *(b t), with (s a)* = a* s^{-1} and
/// *(b t) = t^{-1} *b, so each (a, b) contributes
/// sum_{s,t} [b (ts) a] a* (ts)^{-1} *b.
inline Premutation premutate(const Series& p, std::size_t k) {
  const SpeciesShape& shape = p.shape();
  const unsigned n = p.truncation();
  if (k >= shape.vertex_count()) throw EngineError("vertex " + std::to_string(k + 1) + " out of range");
  for (std::size_t i = 0; i < shape.vertex_count(); ++i)
    if (i != k && !shape.arrows_between(i, k).empty() && !shape.arrows_between(k, i).empty())
      throw PreconditionError("premutation undefined: 2-cycle between vertices " + std::to_string(std::min(i, k) + 1) + " and " +
                              std::to_string(std::max(i, k) + 1));
  for (const auto& [key, tail] : p.terms()) {
    if (p.end_vertex(key) != key.vertex) throw PreconditionError("premutation of a non-cyclic element: term " + detail::word_text(shape, key));
    if (key.vertex == k) throw PreconditionError("premutation needs e_k P e_k = 0; offending term " + detail::word_text(shape, key));
  }
  const AlgebraPresentation& dk = shape.algebra(k);
  if (auto cond = check_condition_2(dk); !cond.holds)
    throw PreconditionError("L(" + std::to_string(k + 1) + ") violates condition (2) at (" + dk.basis_labels()[cond.violation->first] + ", " +
                            dk.basis_labels()[cond.violation->second] + ")");

  Premutation out;
  out.k = k;
  out.base = p.shape_ptr();
  std::vector<Arrow> arrows;
  std::vector<std::size_t> incoming, outgoing;
  out.kept.assign(shape.arrows().size(), std::nullopt);
  for (std::size_t a = 0; a < shape.arrows().size(); ++a) {
    const Arrow& arr = shape.arrow(a);
    if (arr.target == k) {
      incoming.push_back(a);
    } else if (arr.source == k) {
      outgoing.push_back(a);
    } else {
      out.kept[a] = arrows.size();
      arrows.push_back(arr);
    }
  }
  for (std::size_t b : incoming)
    for (std::size_t a : outgoing)
      for (std::size_t t = 0; t < dk.dim(); ++t) {
        out.composite[{b, t, a}] = arrows.size();
        arrows.push_back({composite_label(shape.arrow(b).label, dk.basis_labels()[t], shape.arrow(a).label), shape.arrow(b).source,
                          shape.arrow(a).target});
      }
  for (std::size_t a : outgoing) {
    out.right_dual[a] = arrows.size();
    arrows.push_back({right_dual_label(shape.arrow(a).label), shape.arrow(a).target, k});
  }
  for (std::size_t b : incoming) {
    out.left_dual[b] = arrows.size();
    arrows.push_back({left_dual_label(shape.arrow(b).label), k, shape.arrow(b).source});
  }
  auto ns = std::make_shared<const SpeciesShape>(shape.field_ptr(), shape.algebras(), std::move(arrows));
  out.shape = ns;

  // [P]: every b (s a) through k collapses to the composite [b s a]
  Series mp(ns, n);
  for (const auto& [key, tail] : p.terms()) {
    PathKey nk{key.vertex, {}};
    for (std::size_t i = 0; i < key.letters.size(); ++i) {
      const Letter& l = key.letters[i];
      const Arrow& arr = shape.arrow(l.arrow);
      if (arr.target == k) {
        const Letter& next = key.letters[i + 1];
        nk.letters.push_back({static_cast<std::uint32_t>(out.composite.at({l.arrow, next.basis, next.arrow})), l.basis});
        ++i;
      } else {
        nk.letters.push_back({static_cast<std::uint32_t>(*out.kept[l.arrow]), l.basis});
      }
    }
    mp.add_term(nk, tail);
  }

  for (std::size_t a : outgoing)
    for (std::size_t b : incoming) {
      const Series astar = Series::generator(ns, n, out.right_dual.at(a));
      const Series starb = Series::generator(ns, n, out.left_dual.at(b));
      for (std::size_t s = 0; s < dk.dim(); ++s)
        for (std::size_t t = 0; t < dk.dim(); ++t) {
          const Coeffs ts = dk.mul(dk.basis_element(t), dk.basis_element(s));
          Series comp(ns, n);
          for (std::size_t u = 0; u < dk.dim(); ++u) {
            const FieldElement c = dk.component(ts, u);
            if (is_zero(c)) continue;
            comp += Series::generator(ns, n, out.composite.at({b, u, a})).scaled(c);
          }
          mp += comp * astar * Series::algebra_element(ns, n, k, dk.inverse(ts)) * starb;
        }
    }
  out.potential = std::move(mp);
  return out;
}

/// One elementary automorphism: the listed generators are sent to the given
/// series, all others are fixed.
struct LogEntry {
  std::string description;
  std::vector<std::pair<std::size_t, Series>> images;
};

inline Series apply_log_entry(const Series& p, const LogEntry& entry) {
  std::vector<Series> images;
  for (std::size_t a = 0; a < p.shape().arrows().size(); ++a) images.push_back(Series::generator(p.shape_ptr(), p.truncation(), a));
  for (const auto& [a, img] : entry.images) images[a] = img;
  return Substitution(p.shape_ptr(), p.shape_ptr(), p.truncation(), std::move(images)).apply(p);
}

inline Series replay_log(Series p, const std::vector<LogEntry>& log) {
  for (const auto& e : log) p = apply_log_entry(p, e);
  return p;
}

struct SplitResult {
  ShapePtr shape;
  /// Trivial pairs (a_i, b_i) as generator indices of shape.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// W = sum a_i b_i
  Series trivial;
  /// P'' in the ambient shape
  Series reduced;
  std::vector<LogEntry> log;
  /// Shape with the trivial generators removed, and P'' in it.
  ShapePtr reduced_shape;
  Series reduced_potential;
  std::vector<std::optional<std::size_t>> to_reduced;
  unsigned rounds = 0;
};

namespace detail {

/// R = D_j (x)_F D_i^op with basis t|s; (t (x) s)(t' (x) s') = tt' (x) s's.
/// An element r = t (x) s pairs an arrow a: i -> j with b: j -> i as a t b s.
inline AlgebraPtr pairing_ring(const AlgebraPresentation& dj, const AlgebraPresentation& di) {
  const GroundField& f = dj.field();
  const std::size_t n = dj.dim() * di.dim();
  std::vector<std::string> labels;
  for (std::size_t t = 0; t < dj.dim(); ++t)
    for (std::size_t s = 0; s < di.dim(); ++s) labels.push_back(dj.basis_labels()[t] + "|" + di.basis_labels()[s]);
  StructureTable sc(n, std::vector<std::vector<FieldElement>>(n, std::vector<FieldElement>(n, f.zero())));
  for (std::size_t t = 0; t < dj.dim(); ++t)
    for (std::size_t s = 0; s < di.dim(); ++s)
      for (std::size_t t2 = 0; t2 < dj.dim(); ++t2)
        for (std::size_t s2 = 0; s2 < di.dim(); ++s2)
          for (std::size_t u = 0; u < dj.dim(); ++u) {
            const FieldElement& cu = dj.structure()[t][t2][u];
            if (is_zero(cu)) continue;
            for (std::size_t v = 0; v < di.dim(); ++v) {
              const FieldElement& cv = di.structure()[s2][s][v];
              if (is_zero(cv)) continue;
              FieldElement& cell = sc[t * di.dim() + s][t2 * di.dim() + s2][u * di.dim() + v];
              cell = f.add(cell, f.mul(cu, cv));
            }
          }
  return std::make_shared<const AlgebraPresentation>("R", dj.field_ptr(), std::move(labels), std::move(sc));
}

inline std::optional<Coeffs> try_inverse(const AlgebraPresentation& r, const Coeffs& x) {
  if (is_zero(x)) return std::nullopt;
  auto y = solve(r.left_multiplication(x), r.unit());
  if (!y || r.mul(*y, x) != r.unit()) return std::nullopt;
  return y;
}

using RMatrix = std::vector<std::vector<Coeffs>>;

/// Inverse of a square matrix over the commutative ring R, through the
/// Q-linear map it induces on R^m.
inline RMatrix r_matrix_inverse(const AlgebraPresentation& r, const RMatrix& m) {
  const std::size_t sz = m.size();
  const std::size_t fl = r.flat_dim();
  DenseMatrix big(sz * fl);
  for (std::size_t q = 0; q < sz; ++q)
    for (std::size_t beta = 0; beta < fl; ++beta) {
      Coeffs x(fl);
      x[beta] = 1;
      for (std::size_t p = 0; p < sz; ++p) {
        const Coeffs y = r.mul(m[p][q], x);
        for (std::size_t i = 0; i < fl; ++i) big.at(p * fl + i, q * fl + beta) = y[i];
      }
    }
  RMatrix inv(sz, std::vector<Coeffs>(sz, r.zero()));
  for (std::size_t q = 0; q < sz; ++q) {
    Coeffs rhs(sz * fl);
    for (std::size_t i = 0; i < fl; ++i) rhs[q * fl + i] = r.unit()[i];
    auto sol = solve(big, rhs);
    if (!sol) throw PreconditionError("degenerate degree-2 pairing: pairing matrix is not invertible");
    for (std::size_t p = 0; p < sz; ++p) inv[p][q] = Coeffs(sol->begin() + static_cast<std::ptrdiff_t>(p * fl), sol->begin() + static_cast<std::ptrdiff_t>((p + 1) * fl));
  }
  return inv;
}

/// r . x for a generator x: i -> j paired from the other side, written as the
/// degree-1 series sum c (first letter basis) x (tail) for r = sum c first|tail.
inline Series act_on_generator(const ShapePtr& shape, unsigned n, const AlgebraPresentation& r, const Coeffs& elem, std::size_t arrow,
                               std::size_t first_dim) {
  const Arrow& arr = shape->arrow(arrow);
  const AlgebraPresentation& tail_alg = shape->algebra(arr.target);
  Series out(shape, n);
  for (std::size_t idx = 0; idx < r.dim(); ++idx) {
    const FieldElement c = r.component(elem, idx);
    if (is_zero(c)) continue;
    const std::size_t first = idx / (r.dim() / first_dim);
    const std::size_t tail = idx % (r.dim() / first_dim);
    PathKey key{static_cast<std::uint32_t>(arr.source), {Letter{static_cast<std::uint32_t>(arrow), static_cast<std::uint32_t>(first)}}};
    out.add_term(key, tail_alg.scale(c, tail_alg.basis_element(tail)));
  }
  return out;
}

}  // namespace detail

/// Splitting: finds an automorphism phi (logged as elementary substitutions)
/// with phi(P) cyclically equivalent to W + P'' where W = sum a_i b_i is
/// trivial and P'' contains no a_i, b_i.
inline SplitResult split_reduce(const Series& p) {
  const ShapePtr& sp = p.shape_ptr();
  const SpeciesShape& shape = *sp;
  const unsigned n = p.truncation();
  for (const auto& [key, tail] : p.terms())
    if (key.degree() == 1) throw PreconditionError("potential has a degree-1 part");

  SplitResult res;
  res.shape = sp;
  res.trivial = Series(sp, n);
  res.reduced = p;
  res.reduced_shape = sp;
  res.reduced_potential = p;
  res.to_reduced.resize(shape.arrows().size());
  for (std::size_t a = 0; a < shape.arrows().size(); ++a) res.to_reduced[a] = a;

  const Series canon = canonical_cyclic_form(p);
  const Series two = canon.degree_component(2);
  if (two.is_zero()) return res;

  // degree-2 canonicalization, one vertex pair at a time
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, FieldElement>>> blocks;
  for (const auto& [key, tail] : two.terms()) {
    Letter l1 = key.letters[0], l2 = key.letters[1];
    if (shape.arrow(l1.arrow).source > shape.arrow(l1.arrow).target) std::swap(l1, l2);
    const std::size_t i = shape.arrow(l1.arrow).source, j = shape.arrow(l1.arrow).target;
    const FieldElement c = shape.algebra(key.vertex).component(tail, 0);
    blocks[{i, j}].emplace_back(l1.arrow, l1.basis, l2.arrow, l2.basis, c);
  }

  LogEntry canon_entry;
  canon_entry.description = "degree-2 canonicalization";
  for (const auto& [ij, terms] : blocks) {
    const auto [i, j] = ij;
    const AlgebraPresentation& di = shape.algebra(i);
    const AlgebraPresentation& dj = shape.algebra(j);
    if (!di.is_commutative() || !dj.is_commutative())
      throw PreconditionError("degree-2 canonicalization needs commutative D_" + std::to_string(i + 1) + " and D_" + std::to_string(j + 1));
    const AlgebraPtr r = detail::pairing_ring(dj, di);
    const auto as = shape.arrows_between(i, j);
    const auto bs = shape.arrows_between(j, i);
    auto pos = [](const std::vector<std::size_t>& v, std::size_t x) { return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin()); };
    detail::RMatrix c(as.size(), std::vector<Coeffs>(bs.size(), r->zero()));
    for (const auto& [a, s, b, t, coeff] : terms) {
      Coeffs& cell = c[pos(as, a)][pos(bs, b)];
      const std::size_t idx = t * di.dim() + s;
      const Coeffs add = r->scale(coeff, r->basis_element(idx));
      for (std::size_t q = 0; q < cell.size(); ++q) cell[q] += add[q];
    }
    // pivots with invertible entries
    detail::RMatrix work = c;
    std::vector<bool> used(as.size(), false);
    std::vector<std::size_t> piv, cols;
    for (std::size_t col = 0; col < bs.size(); ++col) {
      std::optional<std::size_t> row;
      std::optional<Coeffs> inv;
      bool nonzero = false;
      for (std::size_t rr = 0; rr < as.size() && !row; ++rr) {
        if (used[rr] || is_zero(work[rr][col])) continue;
        nonzero = true;
        if ((inv = detail::try_inverse(*r, work[rr][col]))) row = rr;
      }
      if (!row) {
        if (nonzero)
          throw PreconditionError("degenerate degree-2 pairing between vertices " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                  ": no invertible pivot for " + shape.arrow(bs[col]).label);
        continue;
      }
      used[*row] = true;
      piv.push_back(*row);
      cols.push_back(col);
      for (std::size_t rr = 0; rr < as.size(); ++rr) {
        if (used[rr] || is_zero(work[rr][col])) continue;
        const Coeffs f = r->mul(work[rr][col], *inv);
        for (std::size_t cc = 0; cc < bs.size(); ++cc) {
          const Coeffs sub = r->mul(f, work[*row][cc]);
          for (std::size_t q = 0; q < sub.size(); ++q) work[rr][cc][q] -= sub[q];
        }
      }
    }
    const std::size_t rank = piv.size();
    detail::RMatrix m(rank, std::vector<Coeffs>(rank));
    for (std::size_t p1 = 0; p1 < rank; ++p1)
      for (std::size_t q = 0; q < rank; ++q) m[p1][q] = c[piv[p1]][cols[q]];
    const detail::RMatrix minv = detail::r_matrix_inverse(*r, m);

    std::set<std::size_t> piv_set(piv.begin(), piv.end()), col_set(cols.begin(), cols.end());
    // a_p -> a_p - sum_{a not pivot} lambda_ap^tau a, lambda_a = C[a, J] M^{-1}
    for (std::size_t p1 = 0; p1 < rank; ++p1) {
      Series img = Series::generator(sp, n, as[piv[p1]]);
      for (std::size_t rr = 0; rr < as.size(); ++rr) {
        if (piv_set.count(rr)) continue;
        Coeffs lambda = r->zero();
        for (std::size_t q = 0; q < rank; ++q) {
          const Coeffs x = r->mul(c[rr][cols[q]], minv[q][p1]);
          for (std::size_t z = 0; z < x.size(); ++z) lambda[z] += x[z];
        }
        // lambda = y|x acts as x a y: letter basis from D_i, tail in D_j
        Series term(sp, n);
        for (std::size_t idx = 0; idx < r->dim(); ++idx) {
          const FieldElement cf = r->component(lambda, idx);
          if (is_zero(cf)) continue;
          const std::size_t y = idx / di.dim(), x = idx % di.dim();
          PathKey key{static_cast<std::uint32_t>(i), {Letter{static_cast<std::uint32_t>(as[rr]), static_cast<std::uint32_t>(x)}}};
          term.add_term(key, dj.scale(cf, dj.basis_element(y)));
        }
        img -= term;
      }
      canon_entry.images.emplace_back(as[piv[p1]], std::move(img));
    }
    // b_J -> M^{-1} (b_J - N b_notJ); r = t|s acts on b as t b s
    for (std::size_t q = 0; q < rank; ++q) {
      Series img(sp, n);
      for (std::size_t p1 = 0; p1 < rank; ++p1) {
        img += detail::act_on_generator(sp, n, *r, minv[q][p1], bs[cols[p1]], dj.dim());
        for (std::size_t cc = 0; cc < bs.size(); ++cc) {
          if (col_set.count(cc)) continue;
          const Coeffs x = r->mul(minv[q][p1], c[piv[p1]][cc]);
          img -= detail::act_on_generator(sp, n, *r, x, bs[cc], dj.dim());
        }
      }
      canon_entry.images.emplace_back(bs[cols[q]], std::move(img));
    }
    for (std::size_t p1 = 0; p1 < rank; ++p1) res.pairs.emplace_back(as[piv[p1]], bs[cols[p1]]);
  }

  Series cur = apply_log_entry(p, canon_entry);
  res.log.push_back(std::move(canon_entry));
  Series w(sp, n);
  for (const auto& [a, b] : res.pairs) w += Series::generator(sp, n, a) * Series::generator(sp, n, b);
  const Series wc = canonical_cyclic_form(w);
  cur = canonical_cyclic_form(cur);
  if (!(cur.degree_component(2) == wc)) throw EngineError("degree-2 canonicalization did not produce a trivial potential");

  std::map<std::size_t, std::pair<std::size_t, bool>> role;  // arrow -> (pair index, is the a-side)
  for (std::size_t q = 0; q < res.pairs.size(); ++q) {
    role[res.pairs[q].first] = {q, true};
    role[res.pairs[q].second] = {q, false};
  }

  for (unsigned round = 1; round <= n; ++round) {
    std::vector<Series> u(res.pairs.size(), Series(sp, n)), v(res.pairs.size(), Series(sp, n));
    bool excess = false;
    for (const auto& [key, tail] : cur.terms()) {
      if (key.degree() < 3) continue;
      std::size_t at = key.degree();
      for (std::size_t x = 0; x < key.degree(); ++x)
        if (role.count(key.letters[x].arrow)) {
          at = x;
          break;
        }
      if (at == key.degree()) continue;
      excess = true;
      const FieldElement c = shape.algebra(key.vertex).component(tail, 0);
      const std::vector<Letter> rot = detail::rotated(key.letters, at);
      const Letter head = rot.front();
      const auto [q, is_a] = role.at(head.arrow);
      const Arrow& ha = shape.arrow(head.arrow);
      PathKey rest{static_cast<std::uint32_t>(ha.target), std::vector<Letter>(rot.begin() + 1, rot.end())};
      const AlgebraPresentation& dt = shape.algebra(ha.source);
      // (s x) rest ~ x (rest s)
      Series term = Series::word(sp, n, rest, dt.scale(c, dt.basis_element(head.basis)));
      (is_a ? u[q] : v[q]) += term;
    }
    if (!excess) break;
    LogEntry entry;
    entry.description = "reduction round " + std::to_string(round);
    for (std::size_t q = 0; q < res.pairs.size(); ++q) {
      const auto [a, b] = res.pairs[q];
      if (!v[q].is_zero()) entry.images.emplace_back(a, Series::generator(sp, n, a) - v[q]);
      if (!u[q].is_zero()) entry.images.emplace_back(b, Series::generator(sp, n, b) - u[q]);
    }
    cur = canonical_cyclic_form(apply_log_entry(cur, entry));
    res.log.push_back(std::move(entry));
    res.rounds = round;
  }

  Series reduced = cur - wc;
  for (const auto& [key, tail] : reduced.terms())
    for (const auto& l : key.letters)
      if (role.count(l.arrow)) throw EngineError("reduction did not terminate within the truncation degree");
  res.trivial = w;
  res.reduced = reduced;

  std::set<std::size_t> removed;
  for (const auto& [a, b] : res.pairs) {
    removed.insert(a);
    removed.insert(b);
  }
  auto rs = std::make_shared<const SpeciesShape>(remove_arrows(shape, removed, &res.to_reduced));
  Series rp(rs, n);
  for (const auto& [key, tail] : reduced.terms()) {
    PathKey nk{key.vertex, {}};
    for (const auto& l : key.letters) nk.letters.push_back({static_cast<std::uint32_t>(*res.to_reduced[l.arrow]), l.basis});
    rp.add_term(nk, tail);
  }
  res.reduced_shape = rs;
  res.reduced_potential = std::move(rp);
  return res;
}

/// Replaying the log on the input gives W + P'' up to the commutator span.
inline bool check_replay(const Series& input, const SplitResult& res) {
  return cyclically_equivalent(replay_log(input, res.log), res.trivial + res.reduced);
}

struct MutationResult {
  std::size_t k = 0;
  Premutation premutation;
  SplitResult split;
  ShapePtr shape;
  Series potential;
  /// False when the mutated shape has 2-cycles; the mutation is then defined
  /// but degenerate.
  bool two_acyclic = true;
  std::string diagnostic;
};

/// The mutation mu-bar_k: premutation followed by split_reduce.
inline MutationResult mutate(const Series& p, std::size_t k) {
  const auto report = check_two_acyclic_at(p, k);
  if (!report.ok) throw PreconditionError("mutation at " + std::to_string(k + 1) + " undefined: " + report.diagnostic);
  MutationResult res;
  res.k = k;
  res.premutation = premutate(rotate_away_from(p, k), k);
  res.split = split_reduce(res.premutation.potential);
  res.shape = res.split.reduced_shape;
  res.potential = res.split.reduced_potential;
  const auto cycles = res.shape->two_cycles();
  res.two_acyclic = cycles.empty();
  if (!cycles.empty())
    res.diagnostic = "mutated shape has a 2-cycle between vertices " + std::to_string(cycles.front().first + 1) + " and " +
                     std::to_string(cycles.front().second + 1);
  return res;
}

struct InvolutionReport {
  bool tier1 = false;
  bool tier2 = false;
  /// nullopt when the witness search was not attempted
  std::optional<bool> tier3;
  std::string witness;
  std::vector<std::size_t> dims_before, dims_after;
  ShapePtr shape;
  Series potential;
};

namespace detail {

inline bool same_dimension_data(const SpeciesShape& x, const SpeciesShape& y) {
  if (x.vertex_count() != y.vertex_count()) return false;
  for (std::size_t i = 0; i < x.vertex_count(); ++i) {
    if (x.dim(i) != y.dim(i)) return false;
    for (std::size_t j = 0; j < x.vertex_count(); ++j)
      if (x.arrows_between(i, j).size() != y.arrows_between(i, j).size()) return false;
  }
  return true;
}

/// Bounded search for an S-fixing isomorphism phi: F_S(M) -> F_S(M') with
/// phi(P) cyclically equivalent to Q: generators go to grid multiples of
/// generators with the same endpoints plus grid combinations of unit-tail
/// words of length 2.
inline std::optional<std::string> find_witness(const Series& p, const Series& q, std::size_t budget = 200000) {
  const SpeciesShape& from = p.shape();
  const SpeciesShape& to = q.shape();
  const unsigned n = p.truncation();
  const std::size_t count = from.arrows().size();
  if (count != to.arrows().size()) return std::nullopt;
  const std::vector<Rational> grid{1, -1, 2, -2, Rational(1, 2), Rational(-1, 2)};
  const Series target = canonical_cyclic_form(q);

  // length-2 unit-tail words i -> j in the target shape
  auto paths2 = [&](std::size_t i, std::size_t j) {
    std::vector<PathKey> out;
    for (std::size_t a = 0; a < to.arrows().size(); ++a) {
      if (to.arrow(a).source != i) continue;
      for (std::size_t b = 0; b < to.arrows().size(); ++b) {
        if (to.arrow(b).source != to.arrow(a).target || to.arrow(b).target != j) continue;
        for (std::size_t s = 0; s < to.dim(i); ++s)
          for (std::size_t t = 0; t < to.dim(to.arrow(a).target); ++t)
            out.push_back({static_cast<std::uint32_t>(i), {Letter{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(s)},
                                                           Letter{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(t)}}});
      }
    }
    return out;
  };
  std::vector<std::vector<PathKey>> corrections(count);
  for (std::size_t a = 0; a < count; ++a) corrections[a] = paths2(from.arrow(a).source, from.arrow(a).target);

  std::size_t tried = 0;
  std::vector<std::size_t> assign(count);
  std::vector<bool> taken(count, false);
  std::optional<std::string> found;

  std::function<void(std::size_t, std::vector<Series>&)> choose_images = [&](std::size_t a, std::vector<Series>& images) {
    if (found || tried >= budget) return;
    if (a == count) {
      ++tried;
      Substitution phi(p.shape_ptr(), q.shape_ptr(), n, images);
      const Series img = phi.apply(p);
      if (canonical_cyclic_form(img) == target && cyclically_equivalent(img, q)) {
        std::ostringstream text;
        for (std::size_t x = 0; x < count; ++x) {
          if (x) text << "; ";
          text << from.arrow(x).label << " -> ";
          bool first = true;
          for (const auto& [key, tail] : images[x].terms()) {
            if (!first) text << " + ";
            first = false;
            text << to.field().format(to.algebra(images[x].end_vertex(key)).component(tail, 0)) << "*" << word_text(to, key);
          }
        }
        found = text.str();
      }
      return;
    }
    const auto& corr = corrections[a];
    const std::size_t dest = assign[a];
    for (const auto& scalar : grid) {
      std::size_t combos = 1;
      for (std::size_t i = 0; i < corr.size() && combos < budget; ++i) combos *= 3;
      for (std::size_t code = 0; code < combos && !found && tried < budget; ++code) {
        Series img = Series::generator(q.shape_ptr(), n, dest).scaled(scalar);
        std::size_t c = code;
        for (const auto& key : corr) {
          // digit 0, 1, 2 -> coefficient 0, 1, -1, so the zero correction comes first
          const std::size_t digit = c % 3;
          c /= 3;
          if (digit == 0) continue;
          const int coeff = digit == 1 ? 1 : -1;
          img += Series::word(q.shape_ptr(), n, key, to.algebra(from.arrow(a).target).unit()).scaled(Rational(coeff));
        }
        images[a] = std::move(img);
        choose_images(a + 1, images);
      }
      if (found) return;
    }
  };

  std::function<void(std::size_t)> choose_bijection = [&](std::size_t a) {
    if (found || tried >= budget) return;
    if (a == count) {
      std::vector<Series> images(count, Series(q.shape_ptr(), n));
      choose_images(0, images);
      return;
    }
    for (std::size_t b = 0; b < count; ++b) {
      if (taken[b] || to.arrow(b).source != from.arrow(a).source || to.arrow(b).target != from.arrow(a).target) continue;
      taken[b] = true;
      assign[a] = b;
      choose_bijection(a + 1);
      taken[b] = false;
    }
  };
  choose_bijection(0);
  return found;
}

}  // namespace detail

/// Compares mu-bar_k mu-bar_k P with P through the computable invariants:
/// (i) dimension data, (ii) Jacobian graded dimensions up to depth, and
/// (iii) for at most four generators, an explicit right-equivalence witness.
inline InvolutionReport check_involution(const Series& p, std::size_t k, unsigned depth, bool search_witness = true) {
  const MutationResult once = mutate(p, k);
  if (!once.two_acyclic) throw PreconditionError("mutation at " + std::to_string(k + 1) + " is degenerate: " + once.diagnostic);
  const MutationResult twice = mutate(once.potential, k);
  InvolutionReport rep;
  rep.shape = twice.shape;
  rep.potential = twice.potential;
  rep.tier1 = detail::same_dimension_data(p.shape(), *twice.shape);
  rep.dims_before = jacobian_graded_dims(p, depth);
  rep.dims_after = jacobian_graded_dims(twice.potential, depth);
  rep.tier2 = rep.dims_before == rep.dims_after;
  if (search_witness && rep.tier1 && p.shape().arrows().size() <= 4) {
    auto w = detail::find_witness(p, twice.potential);
    rep.tier3 = w.has_value();
    if (w) rep.witness = *w;
  }
  return rep;
}

struct SearchOptions {
  unsigned max_degree = 4;
  int height = 3;
  unsigned truncation = 8;
};

struct SearchReport {
  bool found = false;
  std::optional<Series> potential;
  std::size_t trials_used = 0;
  std::uint64_t seed = 0;
  /// number of cyclic word classes sampled per degree, from degree 2 up
  std::vector<std::size_t> degree_profile;
  std::string last_failure;
};

/// Representatives (least rotations) of the unit-tail cyclic letter
/// sequences of the given degree.
inline std::vector<PathKey> cyclic_word_classes(const SpeciesShape& shape, unsigned degree) {
  std::vector<PathKey> out;
  std::vector<Letter> word;
  std::function<void(std::size_t, std::size_t)> extend = [&](std::size_t start, std::size_t at) {
    if (word.size() == degree) {
      if (at == start && detail::least_rotation(word) == 0) {
        // periodic words have several least rotations; keep index 0 only
        out.push_back({static_cast<std::uint32_t>(start), word});
      }
      return;
    }
    for (std::size_t a = 0; a < shape.arrows().size(); ++a) {
      if (shape.arrow(a).source != at) continue;
      for (std::size_t s = 0; s < shape.dim(at); ++s) {
        word.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(s)});
        extend(start, shape.arrow(a).target);
        word.pop_back();
      }
    }
  };
  for (std::size_t v = 0; v < shape.vertex_count(); ++v) extend(v, v);
  return out;
}

/// Randomized search for a potential whose iterated mutations along the
/// sequence (applied first to last) are all defined and 2-acyclic.
inline SearchReport nondegenerate_search(const ShapePtr& shape, const std::vector<std::size_t>& sequence, std::size_t trials, std::uint64_t seed,
                                         const SearchOptions& options = {}) {
  SearchReport rep;
  rep.seed = seed;
  for (std::size_t i = 0; i + 1 < sequence.size(); ++i)
    if (sequence[i] == sequence[i + 1]) throw EngineError("mutation sequence repeats vertex " + std::to_string(sequence[i] + 1) + " consecutively");
  for (auto k : sequence)
    if (k >= shape->vertex_count()) throw EngineError("vertex " + std::to_string(k + 1) + " out of range");
  const unsigned n = std::max(options.truncation, options.max_degree);
  if (sequence.empty()) {
    rep.found = true;
    rep.potential = Series(shape, n);
    return rep;
  }
  std::vector<PathKey> classes;
  for (unsigned d = 2; d <= options.max_degree; ++d) {
    auto c = cyclic_word_classes(*shape, d);
    rep.degree_profile.push_back(c.size());
    classes.insert(classes.end(), c.begin(), c.end());
  }
  const GroundField& field = shape->field();
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(seed + trial);
    std::uniform_int_distribution<int> dist(-options.height, options.height);
    Series p(shape, n);
    for (const auto& key : classes) {
      FieldElement c = field.zero();
      for (auto& x : c) x = dist(rng);
      if (is_zero(c)) continue;
      p.add_term(key, shape->algebra(key.vertex).scalar(c));
    }
    rep.trials_used = trial + 1;
    try {
      Series cur = p;
      bool ok = true;
      for (auto k : sequence) {
        const MutationResult m = mutate(cur, k);
        if (!m.two_acyclic) {
          rep.last_failure = "trial " + std::to_string(trial) + ": " + m.diagnostic;
          ok = false;
          break;
        }
        cur = m.potential;
      }
      if (ok) {
        rep.found = true;
        rep.potential = p;
        return rep;
      }
    } catch (const PreconditionError& e) {
      rep.last_failure = "trial " + std::to_string(trial) + ": " + e.what();
    }
  }
  return rep;
}

}  // namespace qps
