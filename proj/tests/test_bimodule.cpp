#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace qps;

namespace {

/// b'_ij = -b_ij if k in {i,j}, else b_ij + (|b_ik| b_kj + b_ik |b_kj|) / 2
ExchangeMatrix mutation_oracle(const ExchangeMatrix& m, std::size_t k) {
  ExchangeMatrix out = m;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (i == k || j == k) {
        out.b[i][j] = -m.b[i][j];
      } else {
        out.b[i][j] = m.b[i][j] + (std::llabs(m.b[i][k]) * m.b[k][j] + m.b[i][k] * std::llabs(m.b[k][j])) / 2;
      }
    }
  return out;
}

ExchangeMatrix random_skew_symmetrizable(std::mt19937_64& rng, std::size_t n) {
  ExchangeMatrix m;
  m.d.resize(n);
  for (auto& x : m.d) x = 1 + static_cast<long long>(rng() % 3);
  m.b.assign(n, std::vector<long long>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      // d_i b_ij = -d_j b_ji: take d_i b_ij = c * lcm
      const long long l = std::lcm(m.d[i], m.d[j]);
      const long long c = static_cast<long long>(rng() % 5) - 2;
      m.b[i][j] = c * l / m.d[i];
      m.b[j][i] = -c * l / m.d[j];
    }
  return m;
}

}  // namespace

TEST(Bimodule, Species1416PairDims) {
  const auto shape = fixtures::species1416_shape();
  EXPECT_EQ(bimodule_dims(*shape, 1, 0), std::make_pair(std::size_t{1}, std::size_t{4}));
  EXPECT_EQ(bimodule_dims(*shape, 0, 3), std::make_pair(std::size_t{6}, std::size_t{1}));
  EXPECT_EQ(bimodule_dims(*shape, 0, 1), std::make_pair(std::size_t{0}, std::size_t{0}));
}

TEST(Bimodule, TriangleMatrix) {
  const auto p = fixtures::triangle();
  const ExchangeMatrix expect{{{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}}, {1, 1, 1}};
  EXPECT_EQ(exchange_matrix(p.shape()), expect);
}

TEST(Bimodule, MatrixMutationMatchesOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto m = random_skew_symmetrizable(rng, 2 + t % 4);
    m.validate();
    for (std::size_t k = 0; k < m.size(); ++k) {
      const auto mu = matrix_mutation(m, k);
      EXPECT_EQ(mu, mutation_oracle(m, k));
      EXPECT_NO_THROW(mu.validate());
      EXPECT_EQ(matrix_mutation(mu, k), m);
    }
  }
}

TEST(Bimodule, Species1416MutationAtOne) {
  const auto m = matrix_mutation(fixtures::species1416_matrix(), 0);
  const ExchangeMatrix expect{{{0, 4, 0, -6}, {-1, 0, -1, 6}, {0, 4, 0, -6}, {1, -4, 1, 0}}, {1, 4, 1, 6}};
  EXPECT_EQ(m, expect);
}

TEST(Bimodule, RealizeSpecies1416) {
  const auto b = fixtures::species1416_matrix();
  const auto shape = fixtures::species1416_shape();
  EXPECT_EQ(shape->dim(0), 1u);
  EXPECT_EQ(shape->dim(1), 4u);
  EXPECT_EQ(shape->dim(2), 1u);
  EXPECT_EQ(shape->dim(3), 6u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      if (b.b[i][j] <= 0) continue;
      const auto [left, right] = bimodule_dims(*shape, i, j);
      EXPECT_EQ(static_cast<long long>(left), b.b[i][j]);
      EXPECT_EQ(static_cast<long long>(right), -b.b[j][i]);
    }
  EXPECT_EQ(exchange_matrix(*shape), b);
  EXPECT_EQ(shape->arrows().size(), 4u);
  for (const auto& alg : shape->algebras()) {
    EXPECT_TRUE(check_condition_2(*alg).holds) << alg->label();
    EXPECT_TRUE(check_semi_multiplicative(*alg));
  }
}

TEST(Bimodule, RealizeRandomMatrices) {
  std::mt19937_64 rng(17);
  int realized = 0;
  for (int t = 0; t < 60; ++t) {
    const auto m = random_skew_symmetrizable(rng, 3);
    bool divisible = true;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (m.b[i][j] % m.d[j] != 0) divisible = false;
    if (!divisible) {
      EXPECT_THROW(realize_matrix(m), EngineError);
      continue;
    }
    EXPECT_EQ(exchange_matrix(realize_matrix(m)), m);
    ++realized;
  }
  EXPECT_GT(realized, 5);
}

TEST(Bimodule, RealizeWithExplicitOrder) {
  const ExchangeMatrix m{{{0, 4}, {-1, 0}}, {1, 4}};
  const auto shape = realize_matrix(m, RealizeOptions{2});
  EXPECT_EQ(shape.dim(1), 4u);
  EXPECT_EQ(shape.field().description(), "cyclotomic(2)");
  EXPECT_EQ(exchange_matrix(shape), m);
  EXPECT_THROW(realize_matrix(fixtures::species1416_matrix(), RealizeOptions{2}), EngineError);
}

TEST(Bimodule, MatrixUndefinedWithTwoCycle) {
  auto f = GroundField::rationals();
  auto alg = AlgebraPresentation::ground("F", f);
  SpeciesShape s(f, {alg, alg}, {{"a", 0, 1}, {"b", 1, 0}});
  EXPECT_THROW(exchange_matrix(s), PreconditionError);
}

TEST(Bimodule, ShapeValidation) {
  auto f = GroundField::rationals();
  auto alg = AlgebraPresentation::ground("F", f);
  EXPECT_THROW(SpeciesShape(f, {alg}, {{"a", 0, 0}}), EngineError);
  EXPECT_THROW(SpeciesShape(f, {alg, alg}, {{"a", 0, 1}, {"a", 1, 0}}), EngineError);
  EXPECT_THROW(SpeciesShape(f, {alg}, {{"a", 0, 3}}), EngineError);
  EXPECT_THROW(ExchangeMatrix({{{0, 1}, {1, 0}}, {1, 1}}).validate(), EngineError);
}
