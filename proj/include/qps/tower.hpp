#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "qps/algebra.hpp"

namespace qps {

/// One adjoined root: radicand^(1/order).
struct Radical {
  unsigned order;
  unsigned long radicand;
};

inline bool is_prime(unsigned long p) {
  if (p < 2) return false;
  for (unsigned long q = 2; q * q <= p; ++q)
    if (p % q == 0) return false;
  return true;
}

namespace detail {

inline std::string monomial_label(const std::vector<Radical>& radicals, const std::vector<unsigned>& exps) {
  std::string label;
  for (std::size_t j = 0; j < radicals.size(); ++j) {
    if (exps[j] == 0) continue;
    label += "r" + std::to_string(radicals[j].radicand);
    if (exps[j] > 1) label += "^" + std::to_string(exps[j]);
  }
  return label.empty() ? "e" : label;
}

}  // namespace detail

/// The commutative algebra F[x_1..x_m]/(x_j^{n_j} - p_j) with its monomial
/// basis. Exponent vectors are enumerated with the first radical varying
/// fastest, so the unit comes first. The basis is semi-multiplicative by
/// construction: monomial products carry over into a power of a radicand.
inline AlgebraPtr build_radical_algebra(const std::string& label, const std::shared_ptr<const GroundField>& field,
                                        const std::vector<Radical>& radicals) {
  std::set<unsigned long> seen;
  for (const auto& r : radicals) {
    if (r.order < 2) throw EngineError("radical order must be at least 2");
    if (!is_prime(r.radicand)) throw EngineError("radicand " + std::to_string(r.radicand) + " is not prime");
    if (!seen.insert(r.radicand).second) throw EngineError("repeated prime " + std::to_string(r.radicand));
  }
  const std::size_t m = radicals.size();
  std::vector<std::vector<unsigned>> monomials(1, std::vector<unsigned>(m, 0));
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::vector<unsigned>> next;
    for (unsigned e = 0; e < radicals[j].order; ++e)
      for (const auto& mono : monomials) {
        auto x = mono;
        x[j] = e;
        next.push_back(std::move(x));
      }
    monomials = std::move(next);
  }
  const std::size_t d = monomials.size();
  auto index_of = [&](const std::vector<unsigned>& exps) {
    std::size_t idx = 0, stride = 1;
    for (std::size_t j = 0; j < m; ++j) {
      idx += exps[j] * stride;
      stride *= radicals[j].order;
    }
    return idx;
  };
  std::vector<std::string> labels;
  labels.reserve(d);
  for (const auto& mono : monomials) labels.push_back(detail::monomial_label(radicals, mono));

  StructureTable sc(d, std::vector<std::vector<FieldElement>>(d, std::vector<FieldElement>(d, field->zero())));
  for (std::size_t s = 0; s < d; ++s)
    for (std::size_t t = 0; t < d; ++t) {
      std::vector<unsigned> exps(m);
      Rational coeff = 1;
      for (std::size_t j = 0; j < m; ++j) {
        unsigned e = monomials[s][j] + monomials[t][j];
        if (e >= radicals[j].order) {
          e -= radicals[j].order;
          coeff *= static_cast<unsigned long>(radicals[j].radicand);
        }
        exps[j] = e;
      }
      sc[s][t][index_of(exps)] = field->from_rational(coeff);
    }
  return std::make_shared<const AlgebraPresentation>(label, field, std::move(labels), std::move(sc));
}

/// F(p_1^(1/n), ..., p_m^(1/n)) over F = Q(zeta_n), of dimension n^m.
inline AlgebraPtr build_radical_tower(const std::shared_ptr<const GroundField>& field, unsigned n, const std::vector<unsigned long>& primes,
                                      const std::string& label = "D") {
  if (n < 2) throw EngineError("radical tower needs n >= 2");
  if (!field->contains_roots_of_unity(n))
    throw EngineError("ground field " + field->description() + " does not contain the " + std::to_string(n) + "-th roots of unity");
  std::vector<Radical> radicals;
  radicals.reserve(primes.size());
  for (auto p : primes) radicals.push_back({n, p});
  return build_radical_algebra(label, field, radicals);
}

}  // namespace qps
