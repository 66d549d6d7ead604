#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qps/rational.hpp"

namespace qps {

using SparseVector = std::map<std::uint64_t, Rational>;

/// Incrementally maintained reduced echelon basis of a subspace of
/// Q^(columns).
///
/// Every stored row has a distinct pivot, which is its smallest column, with
/// coefficient one, and every pivot column vanishes in all other rows. Because
/// pivots are leading columns, the subspace of vectors vanishing on all
/// columns below c is spanned by the rows whose pivot is at least c; callers
/// that order columns by degree use this to read off filtration dimensions.
/// Keeping the rows fully reduced keeps their entries canonical, so rational
/// coefficients do not grow along elimination chains.
class RowSpace {
 public:
  /// Adds v to the span. Returns true when v was independent of the rows.
  bool insert(SparseVector v) {
    reduce(v);
    if (v.empty()) return false;
    const Rational lead = v.begin()->second;
    Row row;
    row.reserve(v.size());
    for (auto& [c, x] : v) row.emplace_back(c, x / lead);
    const std::uint64_t pivot = row.front().first;
    // clear the new pivot column from the other rows
    for (auto& other : rows_) {
      auto it = std::lower_bound(other.begin(), other.end(), pivot, [](const auto& e, std::uint64_t c) { return e.first < c; });
      if (it == other.end() || it->first != pivot) continue;
      const Rational factor = it->second;
      other = combine(other, row, factor);
    }
    pivot_of_.emplace(pivot, rows_.size());
    pivots_.push_back(pivot);
    rows_.push_back(std::move(row));
    return true;
  }

  bool contains(SparseVector v) const {
    reduce(v);
    return v.empty();
  }

  std::size_t rank() const { return rows_.size(); }
  const std::vector<std::uint64_t>& pivots() const { return pivots_; }

  /// Subtracts from v the multiples of rows that clear all its pivot columns.
  void reduce(SparseVector& v) const {
    std::vector<std::pair<std::size_t, Rational>> hits;
    for (const auto& [c, x] : v) {
      auto hit = pivot_of_.find(c);
      if (hit != pivot_of_.end()) hits.emplace_back(hit->second, x);
    }
    for (const auto& [r, factor] : hits)
      for (const auto& [c, x] : rows_[r]) {
        auto [it, inserted] = v.try_emplace(c);
        it->second -= factor * x;
        if (sgn(it->second) == 0) v.erase(it);
      }
  }

 private:
  using Row = std::vector<std::pair<std::uint64_t, Rational>>;

  /// a - factor * b, merged by column
  static Row combine(const Row& a, const Row& b, const Rational& factor) {
    Row out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
        out.push_back(a[i++]);
      } else if (i == a.size() || b[j].first < a[i].first) {
        out.emplace_back(b[j].first, -factor * b[j].second);
        ++j;
      } else {
        Rational x = a[i].second - factor * b[j].second;
        if (sgn(x) != 0) out.emplace_back(a[i].first, std::move(x));
        ++i;
        ++j;
      }
    }
    return out;
  }

  std::vector<Row> rows_;
  std::unordered_map<std::uint64_t, std::size_t> pivot_of_;
  std::vector<std::uint64_t> pivots_;
};

/// Dense square matrix over Q, row-major.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<Rational> a;

  explicit DenseMatrix(std::size_t size = 0) : n(size), a(size * size) {}
  Rational& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const Rational& at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// Solves A x = b exactly; nullopt when A is singular.
inline std::optional<Coeffs> solve(DenseMatrix m, Coeffs b) {
  const std::size_t n = m.n;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && sgn(m.at(piv, col)) == 0) ++piv;
    if (piv == n) return std::nullopt;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m.at(piv, j), m.at(col, j));
      std::swap(b[piv], b[col]);
    }
    const Rational inv = 1 / m.at(col, col);
    for (std::size_t j = col; j < n; ++j) m.at(col, j) *= inv;
    b[col] *= inv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col || sgn(m.at(i, col)) == 0) continue;
      const Rational f = m.at(i, col);
      for (std::size_t j = col; j < n; ++j) m.at(i, j) -= f * m.at(col, j);
      b[i] -= f * b[col];
    }
  }
  return b;
}

inline bool is_invertible(DenseMatrix m) {
  const std::size_t n = m.n;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && sgn(m.at(piv, col)) == 0) ++piv;
    if (piv == n) return false;
    if (piv != col)
      for (std::size_t j = 0; j < n; ++j) std::swap(m.at(piv, j), m.at(col, j));
    for (std::size_t i = col + 1; i < n; ++i) {
      if (sgn(m.at(i, col)) == 0) continue;
      const Rational f = m.at(i, col) / m.at(col, col);
      for (std::size_t j = col; j < n; ++j) m.at(i, j) -= f * m.at(col, j);
    }
  }
  return true;
}

}  // namespace qps
