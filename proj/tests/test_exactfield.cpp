#include <gtest/gtest.h>

#include <random>

#include "qps/tower.hpp"

using namespace qps;

namespace {

std::vector<Integer> poly(std::initializer_list<int> c) {
  std::vector<Integer> out;
  for (int x : c) out.emplace_back(x);
  return out;
}

FieldElement random_element(const GroundField& f, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(-5, 5);
  FieldElement x = f.zero();
  for (auto& q : x) {
    q = Rational(d(rng), 1 + std::abs(d(rng)));
    q.canonicalize();
  }
  return x;
}

}  // namespace

TEST(GroundField, CyclotomicPolynomials) {
  EXPECT_EQ(GroundField::cyclotomic(3)->modulus(), poly({1, 1, 1}));
  EXPECT_EQ(GroundField::cyclotomic(4)->modulus(), poly({1, 0, 1}));
  EXPECT_EQ(GroundField::cyclotomic(6)->modulus(), poly({1, -1, 1}));
  EXPECT_EQ(GroundField::cyclotomic(8)->modulus(), poly({1, 0, 0, 0, 1}));
  EXPECT_EQ(GroundField::cyclotomic(9)->modulus(), poly({1, 0, 0, 1, 0, 0, 1}));
  EXPECT_EQ(GroundField::cyclotomic(12)->modulus(), poly({1, 0, -1, 0, 1}));
  EXPECT_EQ(GroundField::cyclotomic(5)->degree(), 4u);
  EXPECT_EQ(GroundField::rationals()->degree(), 1u);
  EXPECT_EQ(GroundField::cyclotomic(2)->degree(), 1u);
}

TEST(GroundField, ZetaHasExactOrder) {
  for (unsigned n : {3u, 4u, 5u, 6u, 7u, 8u, 12u}) {
    auto f = GroundField::cyclotomic(n);
    EXPECT_EQ(f->zeta_power(n), f->one()) << n;
    for (unsigned k = 1; k < n; ++k) {
      EXPECT_NE(f->zeta_power(k), f->one()) << n << " " << k;
      EXPECT_EQ(f->mul(f->zeta_power(k), f->zeta_power(n - k)), f->one());
    }
  }
  auto f2 = GroundField::cyclotomic(2);
  EXPECT_EQ(f2->zeta_power(1), f2->from_rational(-1));
}

TEST(GroundField, FieldAxiomsOnRandomElements) {
  std::mt19937_64 rng(11);
  for (unsigned n : {1u, 3u, 5u, 6u, 12u}) {
    auto f = n == 1 ? GroundField::rationals() : GroundField::cyclotomic(n);
    for (int trial = 0; trial < 40; ++trial) {
      const auto x = random_element(*f, rng), y = random_element(*f, rng), z = random_element(*f, rng);
      EXPECT_EQ(f->mul(x, y), f->mul(y, x));
      EXPECT_EQ(f->mul(f->mul(x, y), z), f->mul(x, f->mul(y, z)));
      EXPECT_EQ(f->mul(x, f->add(y, z)), f->add(f->mul(x, y), f->mul(x, z)));
      if (!f->is_zero(x)) {
        EXPECT_EQ(f->mul(x, f->inv(x)), f->one());
      }
    }
  }
}

TEST(GroundField, RootsOfUnity) {
  EXPECT_TRUE(GroundField::rationals()->contains_roots_of_unity(2));
  EXPECT_FALSE(GroundField::rationals()->contains_roots_of_unity(3));
  EXPECT_TRUE(GroundField::cyclotomic(3)->contains_roots_of_unity(6));
  EXPECT_TRUE(GroundField::cyclotomic(6)->contains_roots_of_unity(3));
  EXPECT_FALSE(GroundField::cyclotomic(4)->contains_roots_of_unity(3));
  EXPECT_THROW(GroundField::cyclotomic(0), EngineError);
}

TEST(GroundField, Format) {
  auto f = GroundField::cyclotomic(3);
  FieldElement x = f->zero();
  x[0] = Rational(1, 2);
  x[1] = -1;
  EXPECT_EQ(f->format(x), "(1/2 - zeta)");
  EXPECT_EQ(f->format(f->zeta_power(2)), "(-1 - zeta)");
  EXPECT_EQ(f->format(f->zero()), "0");
}

TEST(Tower, CubeRootsOverQZeta3) {
  auto f = GroundField::cyclotomic(3);
  auto d = build_radical_tower(f, 3, {2, 5});
  EXPECT_EQ(d->dim(), 9u);
  EXPECT_TRUE(check_associativity(*d));
  EXPECT_TRUE(check_unit(*d));
  EXPECT_TRUE(check_condition_2(*d).holds);
  EXPECT_TRUE(check_semi_multiplicative(*d));
  EXPECT_TRUE(check_basis_invertible(*d));
  EXPECT_TRUE(d->is_commutative());
  // (2^(1/3))^3 = 2
  const auto r = d->basis_element(*d->find_basis("r2"));
  EXPECT_EQ(d->mul(r, d->mul(r, r)), d->scale(f->from_rational(2), d->unit()));
}

TEST(Tower, SquareRootsOverQ) {
  auto d = build_radical_tower(GroundField::rationals(), 2, {2, 3, 5});
  EXPECT_EQ(d->dim(), 8u);
  EXPECT_TRUE(check_associativity(*d));
  EXPECT_TRUE(check_unit(*d));
  EXPECT_TRUE(check_condition_2(*d).holds);
  EXPECT_TRUE(check_semi_multiplicative(*d));
  const auto x = d->basis_element(*d->find_basis("r2r3"));
  EXPECT_EQ(d->mul(x, x), d->scale(d->field().from_rational(6), d->unit()));
}

TEST(Tower, DimensionIsPowerOfOrder) {
  auto f = GroundField::cyclotomic(5);
  for (std::size_t m = 1; m <= 2; ++m) {
    std::vector<unsigned long> primes{2, 3};
    primes.resize(m);
    EXPECT_EQ(build_radical_tower(f, 5, primes)->dim(), m == 1 ? 5u : 25u);
  }
}

TEST(Tower, Errors) {
  EXPECT_THROW(build_radical_tower(GroundField::rationals(), 3, {2}), EngineError);
  EXPECT_THROW(build_radical_tower(GroundField::rationals(), 2, {4}), EngineError);
  EXPECT_THROW(build_radical_tower(GroundField::rationals(), 2, {2, 2}), EngineError);
}

TEST(Algebra, ConditionTwoFailsForNonMonomialBasis) {
  auto d = build_radical_tower(GroundField::rationals(), 2, {2});
  Coeffs b = d->unit();
  b[1] = 1;  // 1 + sqrt 2
  auto changed = change_basis(*d, {d->unit(), b}, {"e", "s"});
  EXPECT_TRUE(check_associativity(*changed));
  EXPECT_FALSE(check_condition_2(*changed).holds);
  EXPECT_FALSE(check_semi_multiplicative(*changed));
}

TEST(Algebra, ChangeBasisPreservesMultiplication) {
  auto f = GroundField::cyclotomic(3);
  auto d = build_radical_tower(f, 3, {2});
  const Coeffs r = d->basis_element(1), r2 = d->basis_element(2);
  auto changed = change_basis(*d, {d->unit(), d->scale(f->from_rational(3), r2), d->scale(f->zeta_power(1), r)}, {"e", "x", "y"});
  EXPECT_TRUE(check_condition_2(*changed).holds);
  // x = 3 r^2, y = zeta r: x y = 3 zeta r^3 = 6 zeta
  Coeffs expect = changed->scale(f->from_rational(6), changed->scale(f->zeta_power(1), changed->unit()));
  EXPECT_EQ(changed->mul(changed->basis_element(1), changed->basis_element(2)), expect);
  EXPECT_THROW(change_basis(*d, {r, d->unit(), r2}, {"a", "b", "c"}), EngineError);
}

TEST(Algebra, InverseOfRandomElements) {
  auto f = GroundField::cyclotomic(6);
  auto d = build_radical_tower(f, 3, {5, 7});
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    Coeffs x = d->zero();
    for (auto& q : x) q = static_cast<int>(rng() % 7) - 3;
    if (is_zero(x)) continue;
    EXPECT_EQ(d->mul(x, d->inverse(x)), d->unit());
  }
}
