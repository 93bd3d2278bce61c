#include <gtest/gtest.h>

#include "diffy/interp.hpp"
#include "support.hpp"

using namespace diffy;

TEST(Execute, SquareStepsComputesCubes) {
  Parsed p = test::load("c1/safe/square_steps.c");
  std::mt19937_64 rng(1);
  for (std::int64_t n = 1; n <= 6; ++n) {
    Env out = execute(p.program, random_env(p.program, n, rng));
    EXPECT_EQ(out.scalars["x"], n * n * n);
    for (std::int64_t j = 0; j < n; ++j) EXPECT_EQ(out.arrays["b"].cells[j], j + n * n * n);
    EXPECT_TRUE(eval_bool(p.spec.post, out));
  }
}

TEST(Execute, DivisionIsEuclidean) {
  Parsed p = parse_program("void f(int N) {\n int x; int y;\n x = (0 - 7) / 2;\n y = (0 - 7) % 2;\n}\n");
  Env out = execute(p.program, Env{});
  EXPECT_EQ(out.scalars["x"], -4);
  EXPECT_EQ(out.scalars["y"], 1);
}

TEST(Execute, OutOfBoundsWriteIsReported) {
  Parsed p = parse_program("void f(int A[], int N) {\n A[N] = 1;\n}\n");
  Env e;
  e.n = 2;
  try {
    execute(p.program, e);
    FAIL();
  } catch (const InterpError& err) {
    EXPECT_EQ(err.kind, InterpError::Kind::IndexOutOfBounds);
  }
}

TEST(Execute, BudgetIsEnforced) {
  Parsed p = test::load("c3/safe/fill_count.c");
  Env e;
  e.n = 30;
  try {
    execute(p.program, e, 100);
    FAIL();
  } catch (const InterpError& err) {
    EXPECT_EQ(err.kind, InterpError::Kind::UnrollBudgetExceeded);
  }
}

TEST(Quantifiers, EvaluateOverTheirRange) {
  Term a = avar("A", 1);
  Term f = forall_t("i", cst(0), param_n(), gt(select(a, {var("i")}), cst(0)));
  Term g = exists_t("i", cst(0), param_n(), eq(select(a, {var("i")}), cst(0)));
  Env e;
  e.n = 3;
  e.arrays["A"] = ArrayVal{1, {1, 2, 3}};
  EXPECT_TRUE(eval_bool(f, e));
  EXPECT_FALSE(eval_bool(g, e));
  e.arrays["A"].cells[2] = 0;
  EXPECT_FALSE(eval_bool(f, e));
  EXPECT_TRUE(eval_bool(g, e));
}

TEST(RandomEnv, SatisfiesThePrecondition) {
  SolverConfig cfg;
  std::mt19937_64 rng(4);
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    if (!p.program.unsupported.empty()) continue;
    for (std::int64_t n = 1; n <= 4; ++n) {
      auto e = random_env_satisfying(p.program, p.spec.pre, n, rng, &cfg);
      SatResult sat = check_sat({p.spec.pre, eq(param_n(), cst(n))}, cfg);
      ASSERT_EQ(e.has_value(), sat.status == SatStatus::Sat) << f << " N=" << n;
      if (!e) continue;
      EXPECT_TRUE(eval_bool(p.spec.pre, *e)) << f;
    }
  }
}

// check_fixed_n must agree with brute-force execution on random inputs: if
// it says Valid, no sampled input violates the post; if Invalid, the
// witness really violates it.
TEST(FixedN, AgreesWithExecution) {
  SolverConfig cfg;
  std::mt19937_64 rng(9);
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    if (!p.program.unsupported.empty()) continue;
    for (std::int64_t n = 1; n <= 3; ++n) {
      FixedResult r = check_fixed_n(p.spec.pre, p.program, p.spec.post, n, cfg);
      ASSERT_NE(r.status, Validity::Unknown) << f << " N=" << n << " " << r.reason;
      if (r.status == Validity::Valid) {
        for (int k = 0; k < 10; ++k) {
          auto e = random_env_satisfying(p.program, p.spec.pre, n, rng);
          if (!e) break;
          EXPECT_TRUE(eval_bool(p.spec.post, execute(p.program, *e))) << f << " N=" << n;
        }
      } else {
        ASSERT_TRUE(r.witness) << f;
        EXPECT_TRUE(eval_bool(p.spec.pre, *r.witness)) << f;
        EXPECT_FALSE(eval_bool(p.spec.post, execute(p.program, *r.witness))) << f;
      }
    }
  }
}

TEST(FixedN, MutantsHaveSmallCounterexamples) {
  SolverConfig cfg;
  Parsed p = test::load("c1/unsafe/square_steps_mut.c");
  bool found = false;
  for (std::int64_t n = 1; n <= 4 && !found; ++n) {
    FixedResult r = check_fixed_n(p.spec.pre, p.program, p.spec.post, n, cfg);
    if (r.status == Validity::Invalid) {
      found = true;
      EXPECT_TRUE(r.replayed);
    }
  }
  EXPECT_TRUE(found);
}

TEST(SymExec, MatchesConcreteExecution) {
  Parsed p = test::load("c1/safe/square_steps.c");
  SymState st = symbolic_inputs(p.program, 3);
  sym_exec(p.program.body, st);
  EXPECT_TRUE(is_const(simplify(st.scalars.at("x")), nullptr));
  std::int64_t v = 0;
  ASSERT_TRUE(is_const(simplify(st.scalars.at("x")), &v));
  EXPECT_EQ(v, 27);
}
