#include <gtest/gtest.h>

#include <random>

#include "diffy/logic.hpp"
#include "support.hpp"
#include "wp_gen.hpp"

using namespace diffy;

namespace {

Term nm1() { return sub(param_n(), cst(1)); }
Term cube(const Term& t) { return mul({t, t, t}); }

// Same truth value on random environments of p for N = 1..max_n.
void expect_equivalent(const Program& p, const Term& a, const Term& b, std::int64_t max_n = 4) {
  std::mt19937_64 rng(13);
  for (std::int64_t n = 1; n <= max_n; ++n)
    for (int k = 0; k < 20; ++k) {
      Env e = random_env(p, n, rng, -2, 4);
      ASSERT_EQ(eval_bool(a, e), eval_bool(b, e)) << to_string(a) << "  vs  " << to_string(b) << " N=" << n;
    }
}

Program decls_xy_a() { return test::WpGen::decls(); }

}  // namespace

TEST(FormulaDiff, SplitsTheLastIteration) {
  Term a = avar("A", 1);
  Term i = var("i");
  Term phi = forall_t("i", cst(0), param_n(), eq(select(a, {i}), param_n()));
  FormulaDiff d = formula_diff(phi);
  Program p = decls_xy_a();
  expect_equivalent(p, d.phi_prime, forall_t("i", cst(0), nm1(), eq(select(a, {i}), param_n())));
  expect_equivalent(p, d.delta_phi, eq(select(a, {nm1()}), param_n()));
}

TEST(FormulaDiff, PositivityPrecondition) {
  Term a = avar("A", 1);
  Term i = var("i");
  FormulaDiff d = formula_diff(forall_t("i", cst(0), param_n(), gt(select(a, {i}), cst(0))));
  Program p = decls_xy_a();
  expect_equivalent(p, d.phi_prime, forall_t("i", cst(0), nm1(), gt(select(a, {i}), cst(0))));
  expect_equivalent(p, d.delta_phi, gt(select(a, {nm1()}), cst(0)));
}

TEST(FormulaDiff, TrueStaysTrue) {
  FormulaDiff d = formula_diff(tru());
  EXPECT_TRUE(is_true(simplify(d.phi_prime)));
  EXPECT_TRUE(is_true(simplify(d.delta_phi)));
}

TEST(FormulaDiff, IsSoundOnCorpusPreconditions) {
  SolverConfig cfg;
  std::mt19937_64 rng(17);
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    FormulaDiff d = formula_diff(p.spec.pre);
    Term goal = and_t(d.phi_prime, d.delta_phi);
    SolverVerdict v = check_valid(and_t(ge(param_n(), cst(1)), p.spec.pre), goal, cfg);
    EXPECT_EQ(v.status, Validity::Valid) << f << " " << v.reason;
    for (std::int64_t n = 1; n <= 4; ++n) {
      auto e = random_env_satisfying(p.program, p.spec.pre, n, rng);
      if (e) EXPECT_TRUE(eval_bool(goal, *e)) << f;
    }
  }
}

TEST(Wp, SkipReturnsThePost) {
  Term post = eq(var("x"), cst(3));
  auto w = wp(post, seq({}));
  ASSERT_TRUE(w);
  expect_equivalent(decls_xy_a(), *w, post);
}

TEST(Wp, StoreAtAnotherConstantIndexIsDropped) {
  Term a = avar("A", 1);
  auto w = wp(eq(select(a, {cst(0)}), cst(5)), store_stmt("A", {cst(1)}, cst(7)));
  ASSERT_TRUE(w);
  EXPECT_TRUE(same(simplify(*w), simplify(eq(select(a, {cst(0)}), cst(5))))) << to_string(*w);
}

TEST(Wp, SquareStepsLastStore) {
  // wp(b[N-1] == N-1+N^3, b[N-1] = x+N-1) is x == N^3
  Term b = avar("b", 1);
  Term post = eq(select(b, {nm1()}), add(nm1(), cube(param_n())));
  auto w = wp(post, store_stmt("b", {nm1()}, add(var("x"), nm1())));
  ASSERT_TRUE(w);
  Term s = simplify(*w);
  ASSERT_EQ(s->kind, Kind::Cmp);
  EXPECT_TRUE((to_poly(s->kids[0]) - to_poly(s->kids[1]) - (to_poly(var("x")) - to_poly(cube(param_n()))))
                  .is_zero() ||
              (to_poly(s->kids[0]) - to_poly(s->kids[1]) + (to_poly(var("x")) - to_poly(cube(param_n()))))
                  .is_zero())
      << to_string(s);
}

TEST(Wp, RejectsLoops) {
  StmtP loop = for_stmt("i", param_n(), assign("x", cst(0)));
  EXPECT_THROW(wp(tru(), loop), LogicError);
}

// env |= wp(P, c)  iff  execute(c, env) |= P, on 200 random triples.
TEST(Wp, OracleOnRandomTriples) {
  test::WpGen g(2024);
  Program decls = decls_xy_a();
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    StmtP code = g.block(2);
    Term post = g.post();
    auto w = wp(post, code, Context(1), 1 << 14);
    ASSERT_TRUE(w) << "split bound hit on triple " << t;
    Program p = decls;
    p.body = code;
    for (int k = 0; k < 20; ++k) {
      std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 4);
      Env e = random_env(p, n, rng, -3, 3);
      ASSERT_EQ(eval_bool(*w, e), eval_bool(post, execute(p, e)))
          << to_source(code) << "post " << to_string(post) << "\n" << env_to_string(e);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 4000);
}

TEST(Qe, EmptySetLeavesTheFormula) {
  Term f = eq(var("y"), add(var("x"), cst(1)));
  auto r = qe_by_substitution({}, f, {}, Context(1));
  ASSERT_TRUE(r);
  EXPECT_TRUE(same(*r, f));
}

TEST(Qe, OnePointRule) {
  Term f = eq(var("y"), add(var("x"), cst(1)));
  auto r = qe_by_substitution({"x"}, f, {{"x", Elim{var("c"), {}, {}}}}, Context(1));
  ASSERT_TRUE(r);
  EXPECT_FALSE(occurs("x", *r));
  EXPECT_TRUE(same(simplify(*r), simplify(eq(var("y"), add(var("c"), cst(1))))));
}

TEST(Qe, SquareStepsArrayDifference) {
  // psi(N-1) over P's b, with bq[j] - bp[j] == (N-1)(2N-1) + N^2 on [0, N-1)
  Term bp = avar("bp", 1), bq = avar("bq", 1);
  Term j = var("j");
  Term psi = forall_t("j", cst(0), nm1(), eq(select(bp, {j}), add(j, cube(nm1()))));
  Term delta = add(mul(nm1(), sub(mul(cst(2), param_n()), cst(1))), mul(param_n(), param_n()));
  Term k = var("k");
  Elim e{lambda({"k"}, sub(select(bq, {k}), delta)), {cst(0)}, {nm1()}};
  auto r = qe_by_substitution({"bp"}, psi, {{"bp", e}}, Context(2));
  ASSERT_TRUE(r);
  EXPECT_FALSE(occurs("bp", *r));
  Program p;
  p.arrays = {{"bq", 1}};
  Term want = forall_t("j", cst(0), nm1(), eq(select(bq, {j}), add(j, cube(param_n()))));
  std::mt19937_64 rng(1);
  for (std::int64_t n = 2; n <= 4; ++n) {
    Env hit;
    hit.n = n;
    hit.arrays["bq"] = ArrayVal{1, std::vector<std::int64_t>(n)};
    for (std::int64_t x = 0; x < n; ++x) hit.arrays["bq"].cells[x] = x + n * n * n;
    EXPECT_TRUE(eval_bool(*r, hit));
    EXPECT_TRUE(eval_bool(want, hit));
    for (int t = 0; t < 10; ++t) {
      Env e = random_env(p, n, rng);
      EXPECT_EQ(eval_bool(*r, e), eval_bool(want, e));
    }
  }
}

TEST(Hoare, SkipFalseHasModelN1) {
  SolverConfig cfg;
  SolverVerdict v = check_hoare_loopfree(tru(), seq({}), fls(), cfg);
  ASSERT_EQ(v.status, Validity::Invalid);
  EXPECT_EQ(v.model.at("N"), 1);
}

TEST(Hoare, GuardedStoreMatchesEnumeration) {
  SolverConfig cfg;
  Term a = avar("A", 1), b = avar("B", 1);
  Term pre = ge(select(a, {nm1()}), cst(0));
  StmtP code = if_stmt(ge(select(a, {nm1()}), cst(0)), store_stmt("B", {nm1()}, cst(1)),
                       store_stmt("B", {nm1()}, cst(0)));
  Term post = eq(select(b, {nm1()}), cst(1));
  EXPECT_EQ(check_hoare_loopfree(pre, code, post, cfg).status, Validity::Valid);
  Program p;
  p.arrays = {{"A", 1}, {"B", 1}};
  p.body = code;
  for (std::int64_t n = 1; n <= 3; ++n)
    for (std::int64_t v = -2; v <= 2; ++v) {
      Env e;
      e.n = n;
      e.arrays["A"] = ArrayVal{1, std::vector<std::int64_t>(n, 0)};
      e.arrays["B"] = ArrayVal{1, std::vector<std::int64_t>(n, 5)};
      e.arrays["A"].cells[n - 1] = v;
      if (eval_bool(pre, e)) EXPECT_TRUE(eval_bool(post, execute(p, e)));
    }
  EXPECT_EQ(check_hoare_loopfree(tru(), code, post, cfg).status, Validity::Invalid);
}

TEST(Hoare, SquareStepsStepAfterStrengthening) {
  SolverConfig cfg;
  Parsed src = test::load("c1/safe/square_steps.c");
  SsaProgram sp = ssa_rename(src.program, src.spec);
  QAndPeel qp = gen_q_and_peel(sp);
  std::string x = sp.final_version.at("x"), b = sp.final_version.at("b");
  Term bt = avar(b, 1), j = var("j");
  Term n3 = cube(param_n());
  Term psi_q = forall_t("j", cst(0), nm1(), eq(select(bt, {j}), add(j, n3)));
  Term pre = and_t(eq(var(x), sub(n3, mul(param_n(), param_n()))), psi_q);
  Term post = and_t(eq(var(x), n3), sp.spec.post);
  EXPECT_EQ(check_hoare_loopfree(pre, qp.peel.body, post, cfg, 2).status, Validity::Valid);
  // without the scalar fact the step fails
  EXPECT_EQ(check_hoare_loopfree(psi_q, qp.peel.body, post, cfg, 2).status, Validity::Invalid);
}

TEST(Solver, Basics) {
  SolverConfig cfg;
  EXPECT_EQ(check_valid(tru(), tru(), cfg).status, Validity::Valid);
  Term x = var("x");
  SatResult r = check_sat({eq(x, cube(param_n())), eq(param_n(), cst(2)), ne(x, cst(8))}, cfg);
  EXPECT_EQ(r.status, SatStatus::Unsat);
  SatResult s = check_sat({eq(x, cube(param_n())), eq(param_n(), cst(3))}, cfg, {x});
  ASSERT_EQ(s.status, SatStatus::Sat);
  EXPECT_EQ(s.values.begin()->second, 27);
  std::string script = emit_smtlib({eq(x, cst(1))});
  EXPECT_NE(script.find("(check-sat)"), std::string::npos);
  EXPECT_TRUE(is_nonlinear(cube(param_n())));
  EXPECT_FALSE(is_nonlinear(add(x, mul(cst(3), param_n()))));
}

TEST(Solver, InvalidAnswersCarryAModel) {
  SolverConfig cfg;
  SolverVerdict v = check_valid(ge(param_n(), cst(1)), ge(param_n(), cst(2)), cfg, {"N"});
  ASSERT_EQ(v.status, Validity::Invalid);
  EXPECT_EQ(v.model.at("N"), 1);
}

TEST(Solver, MissingBinaryIsAnError) {
  SolverConfig cfg;
  cfg.path = "/nonexistent/solver";
  EXPECT_ANY_THROW({
    SatResult r = check_sat({tru()}, cfg);
    if (r.status == SatStatus::Unknown) throw SolverError(r.reason);
  });
}
