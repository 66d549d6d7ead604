#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qps/series.hpp"

namespace qps {

/// Syntax or resolution error in the text format, with a 1-based position.
class ParseError : public EngineError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : EngineError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A parsed input file: algebra blocks, the species shape, the potential and
/// session options. Also the save format of a session (history, notes).
struct InputDocument {
  std::shared_ptr<const GroundField> field;
  unsigned truncation = kDefaultTruncation;
  std::optional<std::uint64_t> seed;
  /// declared algebras, in declaration order
  std::vector<AlgebraPtr> algebras;
  ShapePtr shape;
  Series potential;
  /// 0-based mutation vertices applied after loading
  std::vector<std::size_t> history;
  std::vector<std::string> notes;
};

namespace detail {

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '^'; }

inline bool is_zeta_name(std::string_view s) {
  if (s.substr(0, 4) != "zeta") return false;
  if (s.size() == 4) return true;
  if (s.size() < 6 || s[4] != '^') return false;
  for (std::size_t i = 5; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

enum class Tok { Number, Ident, Bracket, Plus, Minus, Star, Slash, LParen, RParen, Dot, At, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t column;  // 1-based
};

inline std::vector<Token> tokenize(std::string_view text, std::size_t line, std::size_t col0) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const std::size_t col = col0 + i;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      out.push_back({Tok::Number, std::string(text.substr(i, j - i)), col});
      i = j;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      out.push_back({Tok::Ident, std::string(text.substr(i, j - i)), col});
      i = j;
    } else if (c == '[') {
      int depth = 0;
      std::size_t j = i;
      for (; j < text.size(); ++j) {
        if (text[j] == '[') ++depth;
        if (text[j] == ']' && --depth == 0) break;
      }
      if (j == text.size()) throw ParseError(line, col, "unbalanced '[' in label");
      out.push_back({Tok::Bracket, std::string(text.substr(i, j - i + 1)), col});
      i = j + 1;
    } else {
      Tok k;
      switch (c) {
        case '+': k = Tok::Plus; break;
        case '-': k = Tok::Minus; break;
        case '*': k = Tok::Star; break;
        case '/': k = Tok::Slash; break;
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case '.': k = Tok::Dot; break;
        case '@': k = Tok::At; break;
        default: throw ParseError(line, col, std::string("unexpected character '") + c + "'");
      }
      out.push_back({k, std::string(1, c), col});
      ++i;
    }
  }
  out.push_back({Tok::End, "", col0 + text.size()});
  return out;
}

/// Recursive-descent evaluator over a value type V with the ring operations
/// supplied by the caller.
template <typename V>
class ExprParser {
 public:
  struct Ops {
    std::function<V(const FieldElement&)> scalar;
    std::function<V(const Token&, ExprParser&)> atom;  // identifiers and bracketed labels
    std::function<V(const V&, const V&, const Token&)> mul;
    std::function<V(const V&, const V&)> add;
    std::function<V(const V&)> neg;
  };

  ExprParser(std::vector<Token> tokens, std::size_t line, const GroundField& field, Ops ops)
      : toks_(std::move(tokens)), line_(line), field_(field), ops_(std::move(ops)) {}

  /// Parses a full expression, returning the value of each top-level term
  /// with the column where it starts.
  std::vector<std::pair<V, std::size_t>> parse_terms() {
    std::vector<std::pair<V, std::size_t>> terms;
    bool negate = false;
    if (peek().kind == Tok::Plus || peek().kind == Tok::Minus) negate = next().kind == Tok::Minus;
    while (true) {
      const std::size_t col = peek().column;
      V t = parse_term();
      terms.emplace_back(negate ? ops_.neg(t) : t, col);
      if (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
        negate = next().kind == Tok::Minus;
        continue;
      }
      break;
    }
    expect(Tok::End, "end of expression");
    return terms;
  }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  void expect(Tok k, const char* what) {
    if (peek().kind != k) error(peek(), std::string("expected ") + what);
    ++pos_;
  }
  [[noreturn]] void error(const Token& t, const std::string& msg) const { throw ParseError(line_, t.column, msg); }
  std::size_t line() const { return line_; }

 private:
  V parse_expr() {
    bool negate = false;
    if (peek().kind == Tok::Plus || peek().kind == Tok::Minus) negate = next().kind == Tok::Minus;
    V acc = parse_term();
    if (negate) acc = ops_.neg(acc);
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const bool minus = next().kind == Tok::Minus;
      V t = parse_term();
      acc = ops_.add(acc, minus ? ops_.neg(t) : t);
    }
    return acc;
  }

  V parse_term() {
    V acc = parse_factor();
    while (peek().kind == Tok::Star) {
      ++pos_;
      const Token& at = peek();
      V f = parse_factor();
      acc = ops_.mul(acc, f, at);
    }
    return acc;
  }

  V parse_factor() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        ++pos_;
        std::string text = t.text;
        if (peek().kind == Tok::Slash) {
          ++pos_;
          if (peek().kind != Tok::Number) error(peek(), "expected denominator");
          text += "/" + next().text;
        }
        try {
          return ops_.scalar(field_.from_rational(parse_rational(text)));
        } catch (const ParseError&) {
          throw;
        } catch (const EngineError& e) {
          error(t, e.what());
        }
      }
      case Tok::LParen: {
        ++pos_;
        V v = parse_expr();
        expect(Tok::RParen, "')'");
        return v;
      }
      case Tok::Ident:
        if (is_zeta_name(t.text)) {
          ++pos_;
          const std::size_t k = t.text.size() == 4 ? 1 : std::stoul(t.text.substr(5));
          if (field_.is_rationals()) error(t, "zeta is not available over the rationals");
          return ops_.scalar(field_.zeta_power(k));
        }
        [[fallthrough]];
      case Tok::Bracket:
      case Tok::At:
        return ops_.atom(t, *this);
      default:
        error(t, "expected a factor");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t line_;
  const GroundField& field_;
  Ops ops_;
};

/// Coefficient text for a monomial: "" for 1, "-" for -1, else "c*".
inline std::string coefficient_prefix(const GroundField& f, const FieldElement& c, bool& negative) {
  negative = false;
  FieldElement x = c;
  std::size_t nonzero = 0;
  for (const auto& q : x)
    if (!is_zero(q)) ++nonzero;
  if (nonzero == 1 && sgn(x[0]) < 0) {
    negative = true;
    x = f.neg(x);
  } else if (nonzero == 1) {
    for (std::size_t i = 1; i < x.size(); ++i)
      if (sgn(x[i]) < 0) {
        negative = true;
        x = f.neg(x);
        break;
      }
  }
  if (x == f.one()) return "";
  return f.format(x) + "*";
}

inline void append_monomial(std::string& out, const GroundField& f, const FieldElement& c, const std::string& body) {
  bool negative = false;
  std::string prefix = coefficient_prefix(f, c, negative);
  if (out.empty()) {
    if (negative) out += "-";
  } else {
    out += negative ? " - " : " + ";
  }
  if (body.empty()) {
    // a bare scalar
    std::string s = prefix.empty() ? "1" : prefix.substr(0, prefix.size() - 1);
    out += s;
  } else {
    out += prefix + body;
  }
}

inline std::string letter_token(const SpeciesShape& shape, const Letter& l) {
  const Arrow& a = shape.arrow(l.arrow);
  if (l.basis == 0) return a.label;
  const AlgebraPresentation& alg = shape.algebra(a.source);
  return alg.label() + "." + alg.basis_labels()[l.basis] + "*" + a.label;
}

}  // namespace detail

/// Deterministic text of a series: terms in canonical word order, each tail
/// expanded in L(end) as coefficient * letters * basis element.
inline std::string format_series(const Series& f) {
  const SpeciesShape& shape = f.shape();
  const GroundField& field = shape.field();
  std::string out;
  for (const auto& [key, tail] : f.terms()) {
    const std::size_t end = f.end_vertex(key);
    const AlgebraPresentation& de = shape.algebra(end);
    std::string word;
    for (const auto& l : key.letters) {
      if (!word.empty()) word += "*";
      word += detail::letter_token(shape, l);
    }
    for (std::size_t u = 0; u < de.dim(); ++u) {
      const FieldElement c = de.component(tail, u);
      if (is_zero(c)) continue;
      std::string body = word;
      if (u != 0) body += (body.empty() ? "" : "*") + de.label() + "." + de.basis_labels()[u];
      if (key.letters.empty()) body += (body.empty() ? "" : "*") + std::string("@") + std::to_string(end + 1);
      detail::append_monomial(out, field, c, body);
    }
  }
  return out.empty() ? "0" : out;
}

namespace detail {

struct SeriesContext {
  ShapePtr shape;
  unsigned truncation;
  std::map<std::string, std::vector<std::size_t>> vertices_of_algebra;
};

inline ExprParser<Series>::Ops series_ops(const SeriesContext& ctx) {
  const ShapePtr shape = ctx.shape;
  const unsigned n = ctx.truncation;
  ExprParser<Series>::Ops ops;
  ops.scalar = [shape, n](const FieldElement& c) { return Series::scalar(shape, n, c); };
  ops.add = [](const Series& a, const Series& b) { return a + b; };
  ops.neg = [](const Series& a) { return -a; };
  ops.mul = [n](const Series& a, const Series& b, const Token&) { return a * b; };
  ops.atom = [&ctx, shape, n](const Token& t, ExprParser<Series>& p) -> Series {
    if (t.kind == Tok::At) {
      p.next();
      if (p.peek().kind != Tok::Number) p.error(p.peek(), "expected a vertex number after '@'");
      const Token num = p.next();
      const std::size_t v = std::stoul(num.text);
      if (v < 1 || v > shape->vertex_count()) p.error(num, "vertex " + num.text + " out of range");
      return Series::idempotent(shape, n, v - 1);
    }
    p.next();
    if (t.kind == Tok::Ident && p.peek().kind == Tok::Dot) {
      p.next();
      if (p.peek().kind != Tok::Ident) p.error(p.peek(), "expected a basis label after '" + t.text + ".'");
      const Token lab = p.next();
      auto it = ctx.vertices_of_algebra.find(t.text);
      if (it == ctx.vertices_of_algebra.end()) p.error(t, "unknown algebra '" + t.text + "'");
      Series out(shape, n);
      for (std::size_t v : it->second) {
        auto idx = shape->algebra(v).find_basis(lab.text);
        if (!idx) p.error(lab, "algebra '" + t.text + "' has no basis label '" + lab.text + "'");
        out += Series::algebra_element(shape, n, v, shape->algebra(v).basis_element(*idx));
      }
      if (it->second.empty()) p.error(t, "algebra '" + t.text + "' is not used at any vertex");
      return out;
    }
    auto a = shape->find_arrow(t.text);
    if (!a) p.error(t, "unknown arrow label '" + t.text + "'");
    return Series::generator(shape, n, *a);
  };
  return ops;
}

inline std::vector<std::pair<Series, std::size_t>> parse_series_terms(const SeriesContext& ctx, std::string_view text, std::size_t line,
                                                                      std::size_t col0) {
  auto ops = series_ops(ctx);
  const unsigned n = ctx.truncation;
  // a zero product of nonzero factors within the truncation is a path clash
  ops.mul = [n](const Series& a, const Series& b, const Token& at) -> Series {
    Series r = a * b;
    if (r.is_zero() && !a.is_zero() && !b.is_zero() && *a.lowest_degree() + *b.lowest_degree() <= n)
      throw ParseError(0, at.column, "path-incompatible product at '" + at.text + "'");
    return r;
  };
  ExprParser<Series> parser(tokenize(text, line, col0), line, ctx.shape->field(), ops);
  try {
    return parser.parse_terms();
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(line, e.column(), std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
}

}  // namespace detail

/// Parses an expression in the series grammar against a shape.
inline Series parse_series(const ShapePtr& shape, unsigned truncation, std::string_view text) {
  detail::SeriesContext ctx{shape, truncation, {}};
  for (std::size_t v = 0; v < shape->vertex_count(); ++v) ctx.vertices_of_algebra[shape->algebra(v).label()].push_back(v);
  Series out(shape, truncation);
  for (auto& [t, col] : detail::parse_series_terms(ctx, text, 1, 1)) out += t;
  return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  if (s.front() == '[') {
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '[') ++depth;
      if (s[i] == ']' && --depth == 0 && i + 1 != s.size()) return false;
    }
    return depth == 0;
  }
  if (!is_ident_start(s.front())) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return !is_zeta_name(s);
}

struct PendingAlgebra {
  std::string name;
  std::size_t dim;
  std::vector<std::string> basis;
  std::size_t line;
  std::vector<std::pair<std::size_t, std::string>> sc_lines;  // (line number, text after "sc:")
};

/// Linear combination of basis labels with field coefficients.
inline std::vector<FieldElement> parse_basis_combination(const GroundField& field, const std::vector<std::string>& basis, std::string_view text,
                                                          std::size_t line, std::size_t col0) {
  using V = std::vector<FieldElement>;  // V.size() == basis.size() + 1; slot basis.size() is a pure scalar
  const std::size_t d = basis.size();
  ExprParser<V>::Ops ops;
  ops.scalar = [&](const FieldElement& c) {
    V v(d + 1, field.zero());
    v[d] = c;
    return v;
  };
  ops.add = [&](const V& a, const V& b) {
    V r(d + 1);
    for (std::size_t i = 0; i <= d; ++i) r[i] = field.add(a[i], b[i]);
    return r;
  };
  ops.neg = [&](const V& a) {
    V r(d + 1);
    for (std::size_t i = 0; i <= d; ++i) r[i] = field.neg(a[i]);
    return r;
  };
  ops.mul = [&](const V& a, const V& b, const Token& at) -> V {
    // only scalar * combination is linear
    auto is_scalar = [&](const V& v) {
      for (std::size_t i = 0; i < d; ++i)
        if (!is_zero(v[i])) return false;
      return true;
    };
    const V* s = is_scalar(a) ? &a : (is_scalar(b) ? &b : nullptr);
    if (!s) throw ParseError(line, at.column, "structure constants must be linear in the basis labels");
    const V& o = s == &a ? b : a;
    V r(d + 1);
    for (std::size_t i = 0; i <= d; ++i) r[i] = field.mul((*s)[d], o[i]);
    return r;
  };
  ops.atom = [&](const Token& t, ExprParser<V>& p) -> V {
    p.next();
    for (std::size_t i = 0; i < d; ++i)
      if (basis[i] == t.text) {
        V v(d + 1, field.zero());
        v[i] = field.one();
        return v;
      }
    p.error(t, "unknown basis label '" + t.text + "'");
  };
  ExprParser<V> parser(tokenize(text, line, col0), line, field, ops);
  V total(d + 1, field.zero());
  for (auto& [v, col] : parser.parse_terms()) total = ops.add(total, v);
  // a bare scalar means a multiple of the unit
  total[0] = field.add(total[0], total[d]);
  total.resize(d);
  return total;
}

}  // namespace detail

/// Parses the line-oriented document format.
inline InputDocument parse_document(std::string_view text) {
  InputDocument doc;
  doc.field = GroundField::rationals();
  bool field_seen = false;
  std::vector<detail::PendingAlgebra> pending;
  std::map<std::string, AlgebraPtr> algebras;
  std::vector<std::pair<AlgebraPtr, std::size_t>> vertices;  // algebra, line
  std::vector<Arrow> arrows;
  std::optional<std::pair<std::size_t, std::string>> potential_line;
  std::size_t potential_col = 0;

  auto finish_algebra = [&](detail::PendingAlgebra& pa) {
    const GroundField& f = *doc.field;
    const std::size_t d = pa.basis.size();
    StructureTable sc(d, std::vector<std::vector<FieldElement>>(d, std::vector<FieldElement>(d, f.zero())));
    for (std::size_t s = 0; s < d; ++s) {
      sc[0][s][s] = f.one();
      sc[s][0][s] = f.one();
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [ln, body] : pa.sc_lines) {
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ParseError(ln, 1, "structure constant line needs '='");
      const std::string lhs = detail::trim(body.substr(0, eq));
      const auto star = lhs.find('*');
      if (star == std::string::npos) throw ParseError(ln, 1, "left side must be a product li*lj");
      const std::string l1 = detail::trim(lhs.substr(0, star)), l2 = detail::trim(lhs.substr(star + 1));
      auto idx = [&](const std::string& l) {
        for (std::size_t i = 0; i < d; ++i)
          if (pa.basis[i] == l) return i;
        throw ParseError(ln, 1, "unknown basis label '" + l + "' in algebra '" + pa.name + "'");
      };
      const std::size_t s = idx(l1), t = idx(l2);
      if (!seen.insert({s, t}).second) throw ParseError(ln, 1, "repeated structure constant " + l1 + "*" + l2);
      sc[s][t] = detail::parse_basis_combination(f, pa.basis, std::string_view(body).substr(eq + 1), ln, 5 + eq + 1);
    }
    try {
      auto alg = std::make_shared<const AlgebraPresentation>(pa.name, doc.field, pa.basis, std::move(sc));
      if (!check_associativity(*alg)) throw ParseError(pa.line, 1, "algebra '" + pa.name + "' is not associative");
      algebras[pa.name] = alg;
      doc.algebras.push_back(alg);
    } catch (const ParseError&) {
      throw;
    } catch (const EngineError& e) {
      throw ParseError(pa.line, 1, e.what());
    }
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t ln = 0;
  detail::PendingAlgebra* open = nullptr;
  while (std::getline(in, raw)) {
    ++ln;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos && line.rfind("note", 0) != 0) line = line.substr(0, hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const std::size_t indent = line.find_first_not_of(" \t") + 1;
    if (t.rfind("sc:", 0) == 0) {
      if (!open) throw ParseError(ln, indent, "structure constant outside an algebra block");
      open->sc_lines.emplace_back(ln, t.substr(3));
      continue;
    }
    if (open) {
      finish_algebra(*open);
      open = nullptr;
    }
    std::istringstream words(t);
    std::string kw;
    words >> kw;
    if (kw == "field") {
      if (field_seen || !doc.algebras.empty() || !pending.empty()) throw ParseError(ln, indent, "field must be declared once, before algebras");
      field_seen = true;
      std::string v = detail::trim(t.substr(5));
      if (v == "rationals") {
        doc.field = GroundField::rationals();
      } else if (v.rfind("cyclotomic(", 0) == 0 && v.back() == ')') {
        const std::string num = v.substr(11, v.size() - 12);
        if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) throw ParseError(ln, indent + 6, "bad cyclotomic order");
        doc.field = GroundField::cyclotomic(static_cast<unsigned>(std::stoul(num)));
      } else {
        throw ParseError(ln, indent + 6, "expected 'rationals' or 'cyclotomic(n)'");
      }
    } else if (kw == "truncate") {
      std::string v;
      words >> v;
      if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || std::stoul(v) == 0)
        throw ParseError(ln, indent + 9, "truncation degree must be a positive integer");
      doc.truncation = static_cast<unsigned>(std::stoul(v));
    } else if (kw == "seed") {
      std::string v;
      words >> v;
      if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) throw ParseError(ln, indent + 5, "seed must be a non-negative integer");
      doc.seed = std::stoull(v);
    } else if (kw == "algebra") {
      detail::PendingAlgebra pa;
      pa.line = ln;
      words >> pa.name;
      if (!detail::valid_label(pa.name) || pa.name.front() == '[') throw ParseError(ln, indent + 8, "bad algebra name");
      if (algebras.count(pa.name)) throw ParseError(ln, indent + 8, "algebra '" + pa.name + "' declared twice");
      std::string item;
      std::optional<std::size_t> dim;
      while (words >> item) {
        if (item.rfind("dim=", 0) == 0) {
          const std::string v = item.substr(4);
          if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) throw ParseError(ln, indent, "bad dim");
          dim = std::stoul(v);
        } else if (item.rfind("basis=", 0) == 0) {
          pa.basis = detail::split(item.substr(6), ',');
          for (const auto& b : pa.basis)
            if (!detail::valid_label(b) || b.front() == '[') throw ParseError(ln, indent, "bad basis label '" + b + "'");
        } else {
          throw ParseError(ln, indent, "unexpected '" + item + "' in algebra header");
        }
      }
      if (pa.basis.empty()) throw ParseError(ln, indent, "algebra needs basis=...");
      if (dim && *dim != pa.basis.size()) throw ParseError(ln, indent, "dim does not match the number of basis labels");
      pa.dim = pa.basis.size();
      pending.push_back(std::move(pa));
      open = &pending.back();
    } else if (kw == "vertex") {
      std::string num, alg;
      words >> num >> alg;
      if (num != std::to_string(vertices.size() + 1)) throw ParseError(ln, indent + 7, "vertices must be numbered 1, 2, ... in order");
      if (alg.rfind("algebra=", 0) != 0) throw ParseError(ln, indent, "expected algebra=NAME");
      auto it = algebras.find(alg.substr(8));
      if (it == algebras.end()) throw ParseError(ln, indent, "unknown algebra '" + alg.substr(8) + "'");
      vertices.emplace_back(it->second, ln);
    } else if (kw == "arrow") {
      // arrow LABEL i -> j; the label may be bracketed and contain spaces? no
      std::string label, from, sym, to;
      words >> label >> from >> sym >> to;
      if (!detail::valid_label(label)) throw ParseError(ln, indent + 6, "bad arrow label '" + label + "'");
      if (sym != "->") throw ParseError(ln, indent, "expected 'LABEL i -> j'");
      auto vnum = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw ParseError(ln, indent, "bad vertex number '" + s + "'");
        const std::size_t v = std::stoul(s);
        if (v < 1 || v > vertices.size()) throw ParseError(ln, indent, "vertex " + s + " is not declared");
        return v - 1;
      };
      arrows.push_back({label, vnum(from), vnum(to)});
    } else if (kw == "potential") {
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(ln, indent, "expected 'potential = EXPR'");
      if (potential_line) throw ParseError(ln, indent, "potential given twice");
      potential_line = std::make_pair(ln, t.substr(eq + 1));
      potential_col = indent + eq + 1;
    } else if (kw == "history") {
      std::string v;
      while (words >> v) {
        if (v.find_first_not_of("0123456789") != std::string::npos || v.empty() || std::stoul(v) == 0) throw ParseError(ln, indent, "bad history vertex");
        doc.history.push_back(std::stoul(v) - 1);
      }
    } else if (kw == "note") {
      doc.notes.push_back(detail::trim(t.substr(4)));
    } else {
      throw ParseError(ln, indent, "unknown keyword '" + kw + "'");
    }
  }
  if (open) finish_algebra(*open);
  if (vertices.empty()) throw ParseError(ln + 1, 1, "document declares no vertices");

  std::vector<AlgebraPtr> valgs;
  for (auto& [a, l] : vertices) valgs.push_back(a);
  try {
    doc.shape = std::make_shared<const SpeciesShape>(doc.field, valgs, arrows);
  } catch (const EngineError& e) {
    throw ParseError(ln, 1, e.what());
  }
  for (std::size_t h : doc.history)
    if (h >= doc.shape->vertex_count()) throw ParseError(ln, 1, "history vertex out of range");
  doc.potential = Series(doc.shape, doc.truncation);
  if (potential_line) {
    detail::SeriesContext ctx{doc.shape, doc.truncation, {}};
    for (std::size_t v = 0; v < doc.shape->vertex_count(); ++v) ctx.vertices_of_algebra[doc.shape->algebra(v).label()].push_back(v);
    for (const auto& a : doc.algebras) ctx.vertices_of_algebra[a->label()];
    for (auto& [term, col] : detail::parse_series_terms(ctx, potential_line->second, potential_line->first, potential_col)) {
      if (!term.is_cyclic()) throw ParseError(potential_line->first, col, "non-cyclic potential term");
      doc.potential += term;
    }
  }
  return doc;
}

inline std::string format_algebra_block(const AlgebraPresentation& alg) {
  const GroundField& f = alg.field();
  std::string out = "algebra " + alg.label() + " dim=" + std::to_string(alg.dim()) + " basis=";
  for (std::size_t i = 0; i < alg.dim(); ++i) out += (i ? "," : "") + alg.basis_labels()[i];
  out += "\n";
  for (std::size_t s = 1; s < alg.dim(); ++s)
    for (std::size_t t = 1; t < alg.dim(); ++t) {
      const auto& entry = alg.structure()[s][t];
      std::string rhs;
      for (std::size_t u = 0; u < alg.dim(); ++u) {
        if (is_zero(entry[u])) continue;
        detail::append_monomial(rhs, f, entry[u], alg.basis_labels()[u]);
      }
      if (rhs.empty()) continue;
      out += "sc: " + alg.basis_labels()[s] + "*" + alg.basis_labels()[t] + " = " + rhs + "\n";
    }
  return out;
}

/// Deterministic text of a document; parse_document(format_document(d))
/// reproduces d.
inline std::string format_document(const InputDocument& doc) {
  std::ostringstream out;
  out << "field " << doc.field->description() << "\n";
  out << "truncate " << doc.truncation << "\n";
  if (doc.seed) out << "seed " << *doc.seed << "\n";
  for (const auto& n : doc.notes) out << "note " << n << "\n";
  std::vector<AlgebraPtr> algs = doc.algebras;
  std::set<std::string> named;
  for (const auto& a : algs) named.insert(a->label());
  for (const auto& a : doc.shape->algebras())
    if (named.insert(a->label()).second) algs.push_back(a);
  for (const auto& a : algs) out << format_algebra_block(*a);
  for (std::size_t v = 0; v < doc.shape->vertex_count(); ++v) out << "vertex " << v + 1 << " algebra=" << doc.shape->algebra(v).label() << "\n";
  for (const auto& a : doc.shape->arrows()) out << "arrow " << a.label << " " << a.source + 1 << " -> " << a.target + 1 << "\n";
  out << "potential = " << format_series(doc.potential) << "\n";
  if (!doc.history.empty()) {
    out << "history";
    for (auto h : doc.history) out << " " << h + 1;
    out << "\n";
  }
  return out.str();
}

/// A document describing a shape and potential, with one algebra block per
/// distinct vertex algebra.
inline InputDocument make_document(const ShapePtr& shape, const Series& potential) {
  InputDocument doc;
  doc.field = shape->field_ptr();
  doc.truncation = potential.truncation();
  std::set<std::string> named;
  for (const auto& a : shape->algebras())
    if (named.insert(a->label()).second) doc.algebras.push_back(a);
  doc.shape = shape;
  doc.potential = potential;
  return doc;
}

}  // namespace qps
