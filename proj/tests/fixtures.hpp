#pragma once

#include <random>

#include "qps/document.hpp"
#include "qps/mutation.hpp"
#include "qps/substitution.hpp"

namespace fixtures {

using namespace qps;

inline Series load(const std::string& text) { return parse_document(text).potential; }

inline std::string header(unsigned n) { return "field rationals\ntruncate " + std::to_string(n) + "\nalgebra F dim=1 basis=e\n"; }

/// 1 -> 2 -> 3 -> 1 with P = abc
inline Series triangle(unsigned n = 10) {
  return load(header(n) + "vertex 1 algebra=F\nvertex 2 algebra=F\nvertex 3 algebra=F\n"
                          "arrow a 1 -> 2\narrow b 2 -> 3\narrow c 3 -> 1\npotential = a*b*c\n");
}

/// 1 -> 2 -> 3 with P = 0
inline Series path(unsigned n = 10) {
  return load(header(n) + "vertex 1 algebra=F\nvertex 2 algebra=F\nvertex 3 algebra=F\narrow a 1 -> 2\narrow b 2 -> 3\npotential = 0\n");
}

inline ExchangeMatrix species1416_matrix() { return {{{0, -4, 0, 6}, {1, 0, -1, 0}, {0, 4, 0, -6}, {-1, 0, 1, 0}}, {1, 4, 1, 6}}; }

inline ShapePtr species1416_shape() { return std::make_shared<const SpeciesShape>(realize_matrix(species1416_matrix())); }

/// The 4-cycle 1 -> 4 -> 3 -> 2 -> 1 of the realized species.
inline Series species1416_cycle(unsigned n = 10) {
  const ShapePtr s = species1416_shape();
  return parse_series(s, n, "a1_4*a4_3*a3_2*a2_1");
}

}  // namespace fixtures

namespace fixtures {

/// B with D = diag(1, 2, 3): a species triangle 1 -> 2 -> 3 -> 1.
inline ExchangeMatrix species123_matrix() { return {{{0, 2, -3}, {-1, 0, 3}, {1, -2, 0}}, {1, 2, 3}}; }

inline ShapePtr species123_shape() { return std::make_shared<const SpeciesShape>(realize_matrix(species123_matrix())); }

inline Series species123_cycle(unsigned n = 10) {
  const ShapePtr s = species123_shape();
  return parse_series(s, n, "a1_2*a2_3*a3_1 + 1/2*a1_2*D2.r5*a2_3*D3.r7*a3_1");
}

}  // namespace fixtures

namespace fixtures {

/// The same potential after a random change of the L(i) bases (unit fixed,
/// other elements permuted and scaled by nonzero field elements, which keeps
/// condition (2)) followed by a random change of Z-local generators
/// a -> c x a y + higher terms, with x, y nonzero algebra elements.
inline Series random_basis_change(const Series& p, std::mt19937_64& rng) {
  const SpeciesShape& shape = p.shape();
  const GroundField& f = shape.field();
  const unsigned n = p.truncation();
  auto nonzero_rational = [&] {
    const int num = 1 + static_cast<int>(rng() % 4);
    Rational q(rng() % 2 ? num : -num, 1 + static_cast<int>(rng() % 3));
    q.canonicalize();
    return q;
  };
  std::vector<AlgebraPtr> algs;
  std::vector<std::vector<std::size_t>> inverse_perm;
  std::vector<std::vector<FieldElement>> inverse_scale;
  for (std::size_t v = 0; v < shape.vertex_count(); ++v) {
    const AlgebraPresentation& old = shape.algebra(v);
    const std::size_t d = old.dim();
    std::vector<std::size_t> perm(d);
    for (std::size_t i = 0; i < d; ++i) perm[i] = i;
    std::shuffle(perm.begin() + 1, perm.end(), rng);
    std::vector<Coeffs> basis;
    std::vector<std::string> labels;
    std::vector<std::size_t> inv(d);
    std::vector<FieldElement> inv_scale(d);
    for (std::size_t j = 0; j < d; ++j) {
      FieldElement c = j == 0 ? f.one() : f.mul(f.from_rational(nonzero_rational()), f.zeta_power(rng() % 6));
      basis.push_back(old.scale(c, old.basis_element(perm[j])));
      labels.push_back(j == 0 ? old.basis_labels()[0] : "x" + std::to_string(j));
      inv[perm[j]] = j;
      inv_scale[perm[j]] = f.inv(c);
    }
    algs.push_back(change_basis(old, basis, labels));
    inverse_perm.push_back(std::move(inv));
    inverse_scale.push_back(std::move(inv_scale));
  }
  auto ns = std::make_shared<const SpeciesShape>(shape.field_ptr(), algs, shape.arrows());
  Series moved(ns, n);
  for (const auto& [key, tail] : p.terms()) {
    PathKey nk = key;
    FieldElement c = f.one();
    for (auto& l : nk.letters) {
      const std::size_t v = shape.arrow(l.arrow).source;
      c = f.mul(c, inverse_scale[v][l.basis]);
      l.basis = static_cast<std::uint32_t>(inverse_perm[v][l.basis]);
    }
    const std::size_t end = p.end_vertex(key);
    const AlgebraPresentation& de = shape.algebra(end);
    Coeffs nt = ns->algebra(end).zero();
    for (std::size_t u = 0; u < de.dim(); ++u) {
      const FieldElement x = f.mul(c, f.mul(de.component(tail, u), inverse_scale[end][u]));
      const std::size_t j = inverse_perm[end][u];
      for (std::size_t q = 0; q < f.degree(); ++q) nt[j * f.degree() + q] += x[q];
    }
    moved.add_term(nk, nt);
  }
  // generator change
  auto random_unit = [&](std::size_t v) {
    const AlgebraPresentation& d = ns->algebra(v);
    Coeffs x = d.zero();
    while (is_zero(x))
      for (auto& q : x) q = static_cast<int>(rng() % 5) - 2;
    return Series::algebra_element(ns, n, v, x);
  };
  std::vector<Series> images;
  for (std::size_t a = 0; a < ns->arrows().size(); ++a) {
    const Arrow& arr = ns->arrow(a);
    Series img = random_unit(arr.source) * Series::generator(ns, n, a) * random_unit(arr.target);
    for (const auto b : ns->arrows_between(arr.source, arr.target))
      if (b != a && rng() % 2) img += Series::generator(ns, n, b).scaled(nonzero_rational());
    // higher-order correction: a times cycles of the potential at target(a)
    if (rng() % 2) {
      Series cycles(ns, n);
      for (const auto& [k, t] : moved.terms())
        if (k.vertex == arr.target) cycles.add_term(k, t);
      img += (Series::generator(ns, n, a) * cycles).scaled(nonzero_rational());
    }
    images.push_back(std::move(img));
  }
  return Substitution(ns, ns, n, images).apply(moved);
}

}  // namespace fixtures
