#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qps {

using Rational = mpq_class;
using Integer = mpz_class;

/// Flat coefficient vector. Its meaning (field element, algebra element) is
/// fixed by whoever owns it.
using Coeffs = std::vector<Rational>;

/// Base class of every error the engine raises.
class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation does not hold.
class PreconditionError : public EngineError {
 public:
  using EngineError::EngineError;
};

inline bool is_zero(const Rational& q) { return sgn(q) == 0; }

inline bool is_zero(const Coeffs& v) {
  for (const auto& q : v)
    if (sgn(q) != 0) return false;
  return true;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

/// Parses "p", "-p" or "p/q" (no whitespace).
inline Rational parse_rational(std::string_view text) {
  if (text.empty()) throw EngineError("empty rational literal");
  Rational q;
  if (q.set_str(std::string(text), 10) != 0) throw EngineError("malformed rational literal '" + std::string(text) + "'");
  if (text.find('/') != std::string_view::npos && sgn(q.get_den()) == 0) throw EngineError("zero denominator");
  q.canonicalize();
  return q;
}

}  // namespace qps
