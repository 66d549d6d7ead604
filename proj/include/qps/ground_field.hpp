#pragma once

#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qps/rational.hpp"

namespace qps {

/// Element of the ground field in the power basis 1, zeta, ..., zeta^(deg-1).
using FieldElement = Coeffs;

/// The ground field F: either Q or a cyclotomic field Q(zeta_n).
///
/// Elements are coefficient vectors in the power basis of zeta_n reduced modulo
/// the n-th cyclotomic polynomial. Q(zeta_1) and Q(zeta_2) have degree one and
/// behave exactly like Q, but keep their order for printing.
class GroundField {
 public:
  static std::shared_ptr<const GroundField> rationals() { return std::shared_ptr<const GroundField>(new GroundField(1, true)); }

  static std::shared_ptr<const GroundField> cyclotomic(unsigned n) {
    if (n == 0) throw EngineError("cyclotomic order must be positive");
    return std::shared_ptr<const GroundField>(new GroundField(n, false));
  }

  bool is_rationals() const { return rationals_; }
  unsigned order() const { return order_; }
  std::size_t degree() const { return modulus_.size() - 1; }

  /// Coefficients of the cyclotomic polynomial, lowest degree first.
  const std::vector<Integer>& modulus() const { return modulus_; }

  /// True when the field contains a primitive m-th root of unity.
  bool contains_roots_of_unity(unsigned m) const {
    const unsigned effective = order_ % 2 == 1 ? 2 * order_ : order_;
    return m != 0 && effective % m == 0;
  }

  std::string description() const {
    if (rationals_) return "rationals";
    return "cyclotomic(" + std::to_string(order_) + ")";
  }

  bool same_as(const GroundField& other) const { return rationals_ == other.rationals_ && order_ == other.order_; }

  FieldElement zero() const { return FieldElement(degree()); }
  FieldElement one() const {
    FieldElement e(degree());
    e[0] = 1;
    return e;
  }
  FieldElement from_rational(const Rational& q) const {
    FieldElement e(degree());
    e[0] = q;
    return e;
  }
  /// zeta^k reduced into the power basis.
  FieldElement zeta_power(std::size_t k) const {
    if (order_ <= 2) return from_rational((order_ == 2 && k % 2 == 1) ? Rational(-1) : Rational(1));
    k %= order_;
    if (k < powers_.size()) return powers_[k];
    FieldElement x = powers_.back();
    for (std::size_t i = powers_.size() - 1; i < k; ++i) x = mul(x, powers_[1]);
    return x;
  }

  /// out += x * y
  void mul_add(const Rational* x, const Rational* y, Rational* out) const {
    const std::size_t d = degree();
    if (d == 1) {
      out[0] += x[0] * y[0];
      return;
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (sgn(x[i]) == 0) continue;
      for (std::size_t j = 0; j < d; ++j) {
        if (sgn(y[j]) == 0) continue;
        const Rational p = x[i] * y[j];
        const FieldElement& red = powers_[i + j];
        for (std::size_t r = 0; r < d; ++r)
          if (sgn(red[r]) != 0) out[r] += p * red[r];
      }
    }
  }

  FieldElement mul(const FieldElement& x, const FieldElement& y) const {
    FieldElement out(degree());
    mul_add(x.data(), y.data(), out.data());
    return out;
  }

  FieldElement add(const FieldElement& x, const FieldElement& y) const {
    FieldElement out(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
    return out;
  }

  FieldElement neg(const FieldElement& x) const {
    FieldElement out(x);
    for (auto& q : out) q = -q;
    return out;
  }

  bool is_zero(const FieldElement& x) const { return qps::is_zero(x); }

  /// Multiplicative inverse, by solving the multiplication-by-x system.
  FieldElement inv(const FieldElement& x) const;

  std::string format(const FieldElement& x) const {
    if (degree() == 1) return to_string(x[0]);
    std::ostringstream out;
    bool first = true;
    std::size_t nonzero = 0;
    for (const auto& q : x)
      if (sgn(q) != 0) ++nonzero;
    if (nonzero == 0) return "0";
    if (nonzero > 1) out << '(';
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (sgn(x[i]) == 0) continue;
      Rational c = x[i];
      if (!first) {
        out << (sgn(c) < 0 ? " - " : " + ");
        c = abs(c);
      } else if (sgn(c) < 0 && i > 0) {
        out << '-';
        c = -c;
      }
      first = false;
      if (i == 0) {
        out << c.get_str();
      } else {
        if (c != 1) out << c.get_str() << '*';
        out << "zeta";
        if (i > 1) out << '^' << i;
      }
    }
    if (nonzero > 1) out << ')';
    return out.str();
  }

 private:
  GroundField(unsigned n, bool rationals) : rationals_(rationals), order_(n) {
    modulus_ = cyclotomic_polynomial(rationals ? 1 : n);
    if (modulus_.size() == 2) {
      // degree one: x - 1 or x + 1; the power table is trivial
      powers_.push_back(from_rational(1));
      powers_.push_back(from_rational(1));
      return;
    }
    const std::size_t d = degree();
    powers_.reserve(2 * d);
    for (std::size_t k = 0; k < 2 * d; ++k) {
      FieldElement e(d);
      if (k < d) {
        e[k] = 1;
      } else {
        // zeta^k = zeta * zeta^(k-1); shift then reduce with the monic modulus
        const FieldElement& prev = powers_[k - 1];
        FieldElement shifted(d + 1);
        for (std::size_t i = 0; i < d; ++i) shifted[i + 1] = prev[i];
        const Rational top = shifted[d];
        for (std::size_t i = 0; i < d; ++i) e[i] = shifted[i] - top * Rational(modulus_[i]);
      }
      powers_.push_back(std::move(e));
    }
  }

  /// Phi_n by exact division of x^n - 1 by Phi_d for the proper divisors d of n.
  static std::vector<Integer> cyclotomic_polynomial(unsigned n) {
    std::vector<Integer> poly(n + 1);
    poly[0] = -1;
    poly[n] = 1;
    for (unsigned d = 1; d < n; ++d) {
      if (n % d != 0) continue;
      poly = divide_exact(poly, cyclotomic_polynomial(d));
    }
    return poly;
  }

  static std::vector<Integer> divide_exact(std::vector<Integer> num, const std::vector<Integer>& den) {
    const std::size_t dn = den.size() - 1;
    std::vector<Integer> quot(num.size() - dn);
    for (std::size_t k = num.size(); k-- > dn;) {
      const Integer c = num[k];  // den is monic
      quot[k - dn] = c;
      for (std::size_t i = 0; i <= dn; ++i) num[k - dn + i] -= c * den[i];
    }
    return quot;
  }

  bool rationals_;
  unsigned order_;
  std::vector<Integer> modulus_;
  std::vector<FieldElement> powers_;
};

}  // namespace qps

#include "qps/linalg.hpp"

namespace qps {

inline FieldElement GroundField::inv(const FieldElement& x) const {
  if (is_zero(x)) throw EngineError("inverse of zero field element");
  const std::size_t d = degree();
  if (d == 1) return from_rational(1 / x[0]);
  DenseMatrix m(d);
  for (std::size_t j = 0; j < d; ++j) {
    // column j: x * zeta^j
    const FieldElement col = mul(x, powers_[j]);
    for (std::size_t i = 0; i < d; ++i) m.at(i, j) = col[i];
  }
  auto sol = solve(std::move(m), one());
  if (!sol) throw EngineError("field element is not invertible");
  return *sol;
}

}  // namespace qps
