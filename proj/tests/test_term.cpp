#include <gtest/gtest.h>

#include <random>

#include "diffy/frontend.hpp"
#include "diffy/interp.hpp"
#include "diffy/simplify.hpp"
#include "diffy/term.hpp"

using namespace diffy;

namespace {

Term random_int_term(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 7);
  std::uniform_int_distribution<int> c(-3, 3);
  switch (pick(rng)) {
    case 0: return cst(c(rng));
    case 1: return param_n();
    case 2: return rng() % 2 ? var("x") : var("y");
    case 3:
    case 4: return add(random_int_term(rng, depth - 1), random_int_term(rng, depth - 1));
    case 5: return mul(random_int_term(rng, depth - 1), random_int_term(rng, depth - 1));
    case 6: return sub(random_int_term(rng, depth - 1), random_int_term(rng, depth - 1));
    default: {
      std::int64_t d = 1 + rng() % 3;
      auto a = random_int_term(rng, depth - 1);
      return rng() % 2 ? diffy::div_t(a, cst(d)) : mod_t(a, cst(d));
    }
  }
}

Term random_bool_term(std::mt19937_64& rng, int depth) {
  static const Rel rels[] = {Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq, Rel::Ne};
  switch (depth <= 0 ? 0 : rng() % 4) {
    case 0: return cmp(rels[rng() % 6], random_int_term(rng, 2), random_int_term(rng, 2));
    case 1: return and_t(random_bool_term(rng, depth - 1), random_bool_term(rng, depth - 1));
    case 2: return or_t(random_bool_term(rng, depth - 1), random_bool_term(rng, depth - 1));
    default: return not_t(random_bool_term(rng, depth - 1));
  }
}

Env env_of(std::int64_t n, std::int64_t x, std::int64_t y) {
  Env e;
  e.n = n;
  e.scalars = {{"x", x}, {"y", y}};
  return e;
}

}  // namespace

TEST(Arith, EuclideanDivisionHasNonNegativeRemainder) {
  for (std::int64_t a = -9; a <= 9; ++a)
    for (std::int64_t b : {-4, -3, -1, 1, 2, 5}) {
      std::int64_t q = euclid_div(a, b), r = euclid_mod(a, b);
      EXPECT_EQ(q * b + r, a);
      EXPECT_GE(r, 0);
      EXPECT_LT(r, b < 0 ? -b : b);
    }
}

TEST(Arith, CheckedOpsThrowOnOverflow) {
  EXPECT_THROW(checked_mul(INT64_MAX / 2, 3), TermError);
  EXPECT_THROW(checked_add(INT64_MAX, 1), TermError);
  EXPECT_EQ(checked_add(2, 3), 5);
}

TEST(Poly, CollectsLikeTerms) {
  Term n = param_n();
  // (N-1)(2N-1) = 2N^2 - 3N + 1
  Poly p = to_poly(mul(sub(n, cst(1)), sub(mul(cst(2), n), cst(1))));
  Poly q = to_poly(add({mul({cst(2), n, n}), mul(cst(-3), n), cst(1)}));
  EXPECT_TRUE((p - q).is_zero());
  EXPECT_EQ(p.degree(), 2);
  EXPECT_EQ(p.const_part(), 1);
}

TEST(Simplify, PreservesValueOnRandomTerms) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 300; ++k) {
    Term t = random_int_term(rng, 4);
    Term s = simplify(t);
    for (std::int64_t n = 1; n <= 4; ++n)
      for (std::int64_t x = -2; x <= 2; ++x) {
        Env e = env_of(n, x, 3 - x);
        ASSERT_EQ(eval_int(t, e), eval_int(s, e)) << to_string(t) << "  vs  " << to_string(s);
      }
  }
}

TEST(Simplify, PreservesTruthOnRandomFormulas) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 300; ++k) {
    Term f = random_bool_term(rng, 3);
    Term s = simplify(f);
    for (std::int64_t n = 1; n <= 3; ++n)
      for (std::int64_t x = -2; x <= 2; ++x) {
        Env e = env_of(n, x, x * x - 1);
        ASSERT_EQ(eval_bool(f, e), eval_bool(s, e)) << to_string(f) << "  vs  " << to_string(s);
      }
  }
}

TEST(Simplify, UsesCounterRanges) {
  Term i = var("i");
  Context ctx = Context(1).with_counter("i", param_n());
  EXPECT_TRUE(is_true(simplify(lt(i, param_n()), ctx)));
  EXPECT_TRUE(is_false(simplify(eq(i, param_n()), ctx)));
  EXPECT_TRUE(ctx.prove_ne(i, add(param_n(), cst(2))));
  EXPECT_FALSE(ctx.prove_lt(i, sub(param_n(), cst(1))));
}

TEST(Subst, IsCaptureAvoiding) {
  // forall i in [0,N) :: A[i] == j, substituting j := i must not capture.
  Term a = avar("A", 1);
  Term f = forall_t("i", cst(0), param_n(), eq(select(a, {var("i")}), var("j")));
  Term g = subst1(f, "j", var("i"));
  EXPECT_TRUE(occurs("i", g));
  Env e;
  e.n = 3;
  e.scalars["i"] = 5;
  e.arrays["A"] = ArrayVal{1, {5, 5, 5}};
  EXPECT_TRUE(eval_bool(g, e));
  e.arrays["A"] = ArrayVal{1, {0, 1, 2}};
  EXPECT_FALSE(eval_bool(g, e));
}

TEST(Printing, FormulasRoundTripThroughTheParser) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    Term f = random_bool_term(rng, 3);
    Term g = parse_formula(to_string(f));
    for (std::int64_t n = 1; n <= 3; ++n) {
      Env e = env_of(n, n - 2, 1);
      ASSERT_EQ(eval_bool(f, e), eval_bool(g, e)) << to_string(f);
    }
  }
}

TEST(FreshNames, ResetMakesThemDeterministic) {
  reset_fresh_names();
  std::string a = fresh_name("t");
  reset_fresh_names();
  EXPECT_EQ(fresh_name("t"), a);
  EXPECT_NE(fresh_name("t"), a);
}
