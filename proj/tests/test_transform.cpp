#include <gtest/gtest.h>

#include "diffy/transform.hpp"
#include "support.hpp"

using namespace diffy;

namespace {

Term nm1() { return sub(param_n(), cst(1)); }

std::vector<StmtP> loops_of(const StmtP& s) {
  std::vector<StmtP> out;
  for (auto& x : items(s))
    if (x->kind == SKind::For) out.push_back(x);
  return out;
}

Program program_of(const std::string& src) { return parse_program(src).program; }

}  // namespace

// P_N and Q_{N-1};peel(P_N) agree on every final value.
TEST(QPeelEquivalence, QThenPeelEqualsOriginal) {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    if (!p.program.unsupported.empty()) continue;
    SsaProgram sp = ssa_rename(p.program, p.spec);
    QAndPeel qp = gen_q_and_peel(sp);
    Program joined = test::q_then_peel(sp, qp);
    for (std::int64_t n = 1; n <= 5; ++n)
      for (int k = 0; k < 10; ++k) {
        Env in = random_env(p.program, n, rng);
        Env want = test::final_values(sp, execute(sp.program, in));
        Env got = test::final_values(sp, execute(joined, in));
        ASSERT_EQ(got, want) << f << " N=" << n;
      }
    ++checked;
  }
  EXPECT_GE(checked, 55);
}

TEST(PeelDepth, PeelIsShallowerThanTheProgram) {
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    SsaProgram sp = ssa_rename(p.program, p.spec);
    QAndPeel qp = gen_q_and_peel(sp);
    int d = nesting_depth(p.program);
    if (d == 0) {
      EXPECT_TRUE(is_empty(qp.raw_peel)) << f;
      continue;
    }
    EXPECT_LT(nesting_depth(qp.raw_peel), d) << f;
    if (d == 1) {
      EXPECT_FALSE(has_loop(qp.raw_peel)) << f;
    }
    EXPECT_LE(nesting_depth(qp.peel), nesting_depth(qp.raw_peel)) << f;
  }
}

// A scalar written by an earlier peel keeps its name in Q (the peel redefines
// the same version), so every such read must have gone through the repair.
TEST(Repair, ReadsOfEarlierPeelDefinitionsAreRewritten) {
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    SsaProgram sp = ssa_rename(p.program, p.spec);
    QAndPeel qp = gen_q_and_peel(sp);
    auto q_loops = loops_of(qp.q.body);
    auto orig_loops = loops_of(truncate_bounds(sp.program.body));
    ASSERT_EQ(q_loops.size(), qp.per_loop.size()) << f;
    for (std::size_t i = 0; i < q_loops.size(); ++i) {
      auto reads = read_vars(orig_loops[i]);
      for (std::size_t j = 0; j < i; ++j)
        for (auto& w : written_vars(qp.per_loop[j].second)) {
          if (sp.program.arrays.count(w) || !reads.count(w) || written_vars(orig_loops[i]).count(w)) continue;
          bool repaired = false;
          for (auto& s : qp.substitutions) repaired |= s.var == w && s.loop == i;
          EXPECT_TRUE(repaired) << f << " " << w << " in loop " << i;
        }
    }
  }
}

TEST(GenQAndPeel, SquareStepsRewritesXInTheSecondLoop) {
  Parsed p = test::load("c1/safe/square_steps.c");
  SsaProgram sp = ssa_rename(p.program, p.spec);
  QAndPeel qp = gen_q_and_peel(sp);
  ASSERT_EQ(qp.substitutions.size(), 1u);
  const Substitution& s = qp.substitutions[0];
  EXPECT_EQ(original_name(s.var), "x");
  EXPECT_EQ(s.loop, 1u);
  Poly d = to_poly(s.value) - to_poly(var(s.var));
  EXPECT_TRUE((d - to_poly(mul(param_n(), param_n()))).is_zero()) << to_string(s.value);
  // the peel is loop-free: one iteration of each loop
  EXPECT_FALSE(has_loop(qp.peel.body));
  EXPECT_EQ(items(qp.peel.body).size(), 3u);
}

TEST(GenQAndPeel, LoopFreeProgramHasEmptyPeel) {
  Parsed p = parse_program("void f(int N) {\n int x;\n x = N + 1;\n}\n");
  SsaProgram sp = ssa_rename(p.program, p.spec);
  QAndPeel qp = gen_q_and_peel(sp);
  EXPECT_TRUE(is_empty(qp.peel.body));
  EXPECT_TRUE(same_stmt(qp.q.body, sp.program.body));
}

TEST(GenQAndPeel, SquareFillPeelCoversTheMissingBorder) {
  Parsed p = test::load("c3/safe/square_fill.c");
  SsaProgram sp = ssa_rename(p.program, p.spec);
  QAndPeel qp = gen_q_and_peel(sp);
  auto top = items(qp.raw_peel);
  ASSERT_EQ(top.size(), 2u);
  ASSERT_EQ(top[0]->kind, SKind::For);
  EXPECT_TRUE(to_poly(sub(top[0]->rhs, nm1())).is_zero());
  ASSERT_EQ(top[1]->kind, SKind::For);
  EXPECT_TRUE(is_var(top[1]->rhs, "N"));
  // Executed alone, the peel writes exactly row N-1 and column N-1.
  const std::string a = sp.final_version.at("A");
  for (std::int64_t n = 1; n <= 5; ++n) {
    Program peel = sp.program;
    peel.body = qp.raw_peel;
    for (auto& c : qp.peel.counters) peel.scalars.insert(c), peel.counters.insert(c);
    Env e;
    e.n = n;
    Env out = execute(peel, e);
    auto& cells = out.arrays.at(a).cells;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j)
        EXPECT_EQ(cells[flat_index(n, {i, j})], (i == n - 1 || j == n - 1) ? n : 0);
  }
}

TEST(GenQAndPeel, QOnlyTruncatesBounds) {
  Parsed p = test::load("c1/safe/square_steps.c");
  SsaProgram sp = ssa_rename(p.program, p.spec);
  StmtP t = truncate_bounds(sp.program.body);
  auto before = loops_of(sp.program.body), after = loops_of(t);
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t k = 0; k < before.size(); ++k) {
    EXPECT_TRUE(to_poly(sub(after[k]->rhs, nm1())).is_zero());
    EXPECT_TRUE(same_stmt(before[k]->body[0], after[k]->body[0]));
  }
}

TEST(PeelForLoop, TwoLevelNestFollowsTheLPeelShape) {
  Program p = program_of(
      "void f(int A[], int N) {\n"
      "  for (int i = 0; i < N; i++)\n"
      "    for (int j = 0; j < N; j++) A[j] = A[j] + i;\n"
      "}\n");
  PeelBuilder b;
  auto [ql, rl] = b.q_and_peel_for_loop(items(p.body)[0]);
  EXPECT_EQ(nesting_depth(ql), 2);
  auto r = items(rl);
  ASSERT_EQ(r.size(), 2u);
  // iterations (i, N-1) for i < N-1, then the whole last row i = N-1
  EXPECT_EQ(r[0]->kind, SKind::For);
  EXPECT_TRUE(to_poly(sub(r[0]->rhs, nm1())).is_zero());
  EXPECT_FALSE(has_loop(r[0]->body[0]));
  EXPECT_EQ(nesting_depth(rl), 1);
}

TEST(PeelForLoop, ThreeLevelNestPeelHasDepthTwo) {
  Program p = program_of(
      "void f(int A[], int N) {\n"
      "  for (int i = 0; i < N; i++)\n"
      "    for (int j = 0; j < N; j++)\n"
      "      for (int k = 0; k < N; k++) A[k] = A[k] + 1;\n"
      "}\n");
  PeelBuilder b;
  auto [ql, rl] = b.q_and_peel_for_loop(items(p.body)[0]);
  EXPECT_EQ(nesting_depth(ql), 3);
  EXPECT_EQ(nesting_depth(rl), 2);
}

TEST(LPeel, ConstantDifferencesUnroll) {
  Program p = program_of("void f(int A[], int N) {\n for (int i = 0; i < N; i++) A[i] = i;\n}\n");
  const Stmt& loop = *items(p.body)[0];
  PeelBuilder b;
  StmtP one = b.lpeel(loop, nm1(), param_n());
  ASSERT_FALSE(has_loop(one));
  ASSERT_EQ(items(one).size(), 1u);
  EXPECT_TRUE(to_poly(sub(items(one)[0]->idx[0], nm1())).is_zero());

  StmtP two = b.lpeel(loop, nm1(), add(param_n(), cst(1)));
  ASSERT_FALSE(has_loop(two));
  auto it = items(two);
  ASSERT_EQ(it.size(), 2u);
  EXPECT_TRUE(to_poly(sub(it[0]->idx[0], nm1())).is_zero());
  EXPECT_TRUE(is_var(it[1]->idx[0], "N"));
}

TEST(LPeel, NonConstantDifferenceLeavesAnEquivalentLoop) {
  Program p = program_of("void f(int A[], int N) {\n for (int i = 0; i < N; i++) A[i] = A[i] + i;\n}\n");
  PeelBuilder b;
  StmtP r = b.lpeel(*items(p.body)[0], cst(0), param_n());
  ASSERT_TRUE(has_loop(r));
  Program q = p;
  q.body = r;
  for (auto& c : b.new_counters) q.scalars.insert(c), q.counters.insert(c);
  std::mt19937_64 rng(2);
  for (std::int64_t n = 1; n <= 4; ++n) {
    Env in = random_env(p, n, rng);
    EXPECT_EQ(execute(q, in).arrays["A"].cells, execute(p, in).arrays["A"].cells);
  }
}

namespace {

// Run a residual loop and its summary from the same start and compare S.
void expect_summary_matches(const std::string& body_rhs, std::int64_t max_n) {
  Program p = program_of("void f(int N) {\n int S;\n for (int l = 0; l < N; l++) S = " + body_rhs + ";\n}\n");
  StmtP loop = items(p.body)[0];
  PeelBuilder b;
  auto sum = b.summarize_peel_loop(loop);
  ASSERT_TRUE(sum.has_value()) << body_rhs;
  EXPECT_FALSE(has_loop(*sum));
  Program q = p;
  q.body = *sum;
  for (std::int64_t n = 1; n <= max_n; ++n)
    for (std::int64_t s0 : {-3, 0, 5}) {
      Env in;
      in.n = n;
      in.scalars["S"] = s0;
      EXPECT_EQ(execute(q, in).scalars["S"], execute(p, in).scalars["S"]) << body_rhs << " N=" << n;
    }
}

}  // namespace

TEST(Summarize, ConstantIncrement) {
  Program p = program_of("void f(int N) {\n int S;\n for (int l = 0; l < N; l++) S = S + 1;\n}\n");
  PeelBuilder b;
  auto sum = b.summarize_peel_loop(items(p.body)[0]);
  ASSERT_TRUE(sum);
  auto it = items(*sum);
  ASSERT_EQ(it.size(), 1u);
  EXPECT_EQ(it[0]->kind, SKind::Assign);
  EXPECT_TRUE((to_poly(it[0]->rhs) - to_poly(add(var("S"), param_n()))).is_zero());
  expect_summary_matches("S + 1", 6);
}

TEST(Summarize, ScaledIncrement) { expect_summary_matches("S + 7", 6); }

TEST(Summarize, CounterLinearAccumulation) { expect_summary_matches("S + l", 6); }

TEST(Summarize, ConstantArrayFill) {
  Program p = program_of("void f(int A[], int N) {\n for (int l = 0; l < N; l++) A[l] = 3;\n}\n");
  PeelBuilder b;
  auto sum = b.summarize_peel_loop(items(p.body)[0]);
  ASSERT_TRUE(sum);
  Program q = p;
  q.body = *sum;
  std::mt19937_64 rng(8);
  for (std::int64_t n = 1; n <= 5; ++n) {
    Env in = random_env(p, n, rng);
    EXPECT_EQ(execute(q, in).arrays["A"].cells, execute(p, in).arrays["A"].cells);
  }
}

TEST(Summarize, DeclinesNonRecurrences) {
  Program p = program_of("void f(int N) {\n int S;\n for (int l = 0; l < N; l++) S = S * 2;\n}\n");
  PeelBuilder b;
  EXPECT_FALSE(b.summarize_peel_loop(items(p.body)[0]).has_value());
}

TEST(NestingDepth, Examples) {
  EXPECT_EQ(nesting_depth(test::load("c3/safe/fill_count.c").program), 2);
  EXPECT_EQ(nesting_depth(program_of("void f(int N) {\n int x;\n x = 1;\n}\n")), 0);
  EXPECT_EQ(nesting_depth(test::load("c1/safe/square_steps.c").program), 1);
}
