#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qps/substitution.hpp"

using namespace qps;
using oracles::Tensor;

namespace {

std::vector<Series> shapes_under_test() { return {fixtures::triangle(6), fixtures::species123_cycle(6), fixtures::species1416_cycle(6)}; }

/// A random legible series from source(a) to target(a) without degree-0 part.
Series random_image(const ShapePtr& shape, unsigned n, std::size_t a, std::mt19937_64& rng) {
  Series img = Series::generator(shape, n, a);
  const Series extra = oracles::random_series(shape, n, 4, 30, rng, false, 1);
  for (const auto& [k, t] : extra.terms())
    if (k.vertex == shape->arrow(a).source && extra.end_vertex(k) == shape->arrow(a).target && k.degree() >= 2) img.add_term(k, t);
  return img;
}

}  // namespace

TEST(Series, ProductMatchesTensorOracle) {
  std::mt19937_64 rng(1);
  for (const auto& p : shapes_under_test()) {
    for (int t = 0; t < 40; ++t) {
      const Series f = oracles::random_series(p.shape_ptr(), 6, 3, 6, rng);
      const Series g = oracles::random_series(p.shape_ptr(), 6, 3, 6, rng);
      EXPECT_EQ(Tensor::from_series(f * g), Tensor::from_series(f).mul(Tensor::from_series(g), 6));
    }
  }
}

TEST(Series, RingAxioms) {
  std::mt19937_64 rng(2);
  for (const auto& p : shapes_under_test()) {
    const auto sp = p.shape_ptr();
    const Series one = Series::one(sp, 6);
    for (int t = 0; t < 20; ++t) {
      const Series f = oracles::random_series(sp, 6, 2, 5, rng);
      const Series g = oracles::random_series(sp, 6, 2, 5, rng);
      const Series h = oracles::random_series(sp, 6, 2, 5, rng);
      EXPECT_EQ((f * g) * h, f * (g * h));
      EXPECT_EQ(f * (g + h), f * g + f * h);
      EXPECT_EQ(one * f, f);
      EXPECT_EQ(f * one, f);
      EXPECT_TRUE((f - f).is_zero());
    }
  }
}

TEST(Series, TruncationDropsLongWords) {
  const Series p = fixtures::triangle(4);
  const Series sq = p * p;
  EXPECT_TRUE(sq.is_zero());
  const Series p6 = fixtures::triangle(6);
  EXPECT_EQ((p6 * p6).size(), 1u);
  EXPECT_EQ((p6 * p6).max_degree(), 6u);
  EXPECT_THROW(p.degree_component(5), EngineError);
  EXPECT_EQ(p6.with_truncation(2).size(), 0u);
}

TEST(Series, LegibleStructure) {
  const auto sp = fixtures::triangle().shape_ptr();
  const Series a = Series::generator(sp, 10, 0), c = Series::generator(sp, 10, 2);
  EXPECT_TRUE((a * c).is_zero());
  EXPECT_FALSE((c * a).is_zero());
  EXPECT_EQ(Series::idempotent(sp, 10, 0) * a, a);
  EXPECT_TRUE((Series::idempotent(sp, 10, 1) * a).is_zero());
  EXPECT_THROW(a + fixtures::triangle(6), EngineError);
}

TEST(Series, AlgebraCoefficientsMoveRight) {
  // in the d = (1,2,3) species: (s a)(t b) with s, t basis elements
  const Series p = fixtures::species123_cycle();
  const auto sp = p.shape_ptr();
  const auto& d2 = sp->algebra(1);
  const Series r = Series::algebra_element(sp, 10, 1, d2.basis_element(1));
  const Series a = Series::generator(sp, 10, 0), b = Series::generator(sp, 10, 1);
  // a r r b = 5 a b since r = sqrt 5
  EXPECT_EQ(a * r * r * b, (a * b).scaled(Rational(5)));
  EXPECT_EQ(Tensor::from_series(a * r * b).terms().size(), 1u);
}

TEST(Series, NormalizeRawWords) {
  const Series p = fixtures::species123_cycle();
  const auto sp = p.shape_ptr();
  const auto& d2 = sp->algebra(1);
  const FieldElement half = sp->field().from_rational(Rational(1, 2));
  RawTerm t{half, {ArrowFactor{0}, AlgebraFactor{1, d2.basis_element(1)}, ArrowFactor{1}}};
  const Series n = normalize(sp, 10, {t});
  EXPECT_EQ(n, (Series::generator(sp, 10, 0) * Series::algebra_element(sp, 10, 1, d2.basis_element(1)) * Series::generator(sp, 10, 1)).scaled(half));
  RawTerm bad{half, {ArrowFactor{0}, ArrowFactor{2}}};
  EXPECT_THROW(normalize(sp, 10, {bad}), PreconditionError);
}

TEST(Substitution, IsAHomomorphism) {
  std::mt19937_64 rng(4);
  for (const auto& p : shapes_under_test()) {
    const auto sp = p.shape_ptr();
    std::vector<Series> images;
    for (std::size_t a = 0; a < sp->arrows().size(); ++a) images.push_back(random_image(sp, 6, a, rng));
    const Substitution phi(sp, sp, 6, images);
    for (int t = 0; t < 10; ++t) {
      const Series f = oracles::random_series(sp, 6, 3, 5, rng);
      const Series g = oracles::random_series(sp, 6, 3, 5, rng);
      EXPECT_EQ(phi.apply(f * g), phi.apply(f) * phi.apply(g));
      EXPECT_EQ(phi.apply(f + g), phi.apply(f) + phi.apply(g));
    }
    EXPECT_EQ(Substitution::identity(sp, 6).apply(p), p);
  }
}

TEST(Substitution, RejectsBadImages) {
  const Series p = fixtures::triangle(6);
  const auto sp = p.shape_ptr();
  std::vector<Series> images{Series::generator(sp, 6, 1), Series::generator(sp, 6, 1), Series::generator(sp, 6, 2)};
  EXPECT_THROW(Substitution(sp, sp, 6, images), EngineError);
  images[0] = Series::generator(sp, 6, 0) + Series::idempotent(sp, 6, 0);
  EXPECT_THROW(Substitution(sp, sp, 6, images), EngineError);
}

TEST(Series, PrintParseRoundTrip) {
  std::mt19937_64 rng(8);
  for (const auto& p : shapes_under_test()) {
    for (int t = 0; t < 30; ++t) {
      const Series f = oracles::random_series(p.shape_ptr(), 6, 4, 6, rng);
      EXPECT_EQ(parse_series(p.shape_ptr(), 6, format_series(f)), f) << format_series(f);
    }
  }
}
