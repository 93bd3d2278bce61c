#include <gtest/gtest.h>

#include "diffy/diffinv.hpp"
#include "support.hpp"

using namespace diffy;

namespace {

struct Pipeline {
  Parsed parsed;
  SsaProgram sp;
  QAndPeel qp;
};

Pipeline prepare(const std::string& rel, std::optional<std::string> post = std::nullopt) {
  Pipeline p{test::load(rel), {}, {}};
  if (post) p.parsed.spec.post = parse_formula(*post, &p.parsed.program);
  p.sp = ssa_rename(p.parsed.program, p.parsed.spec);
  p.qp = gen_q_and_peel(p.sp);
  return p;
}

bool poly_equal(const Term& a, const Term& b) { return (to_poly(a) - to_poly(b)).is_zero(); }

Term nm1() { return sub(param_n(), cst(1)); }

// Programs with loops and integer state.
std::vector<std::string> inference_programs() {
  std::vector<std::string> out;
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    if (p.program.unsupported.empty() && nesting_depth(p.program) > 0) out.push_back(f);
  }
  return out;
}

// Inference result, or nullopt when it declines (nothing is emitted then).
std::optional<DiffInvariant> infer(const Pipeline& p, const DiffInvOptions& opt = {}) {
  reset_fresh_names();
  try {
    return infer_diff_invariants(p.sp, p.qp, p.sp.spec.pre, opt);
  } catch (const DiffInvError&) {
    return std::nullopt;
  }
}

}  // namespace

TEST(DiffInv, SquareStepsExitDifferenceOfX) {
  Pipeline p = prepare("c1/safe/square_steps.c");
  DiffInvariant d = infer_diff_invariants(p.sp, p.qp, p.sp.spec.pre, DiffInvOptions{});
  const std::string x = p.sp.final_version.at("x");
  ASSERT_TRUE(d.exit.count(x));
  ASSERT_FALSE(d.exit.at(x).top);
  Term want = mul(nm1(), sub(mul(cst(2), param_n()), cst(1)));
  EXPECT_TRUE(poly_equal(d.exit.at(x).expr, want)) << to_string(d.exit.at(x).expr);
  // b differs by the x difference plus the N^2 added in the peel of loop 1
  const std::string b = p.sp.final_version.at("b");
  ASSERT_FALSE(d.exit.at(b).top);
  EXPECT_EQ(d.exit.at(b).dims, 1);
  EXPECT_TRUE(poly_equal(d.exit.at(b).expr, add(want, mul(param_n(), param_n()))))
      << to_string(d.exit.at(b).expr);
  ASSERT_EQ(d.loops.size(), 2u);
}

// At the head of loop 1, x differs by (2N-1) per iteration.
TEST(DiffInv, SquareStepsLoopHeadDifferenceGrowsWithTheCounter) {
  Pipeline p = prepare("c1/safe/square_steps.c");
  DiffInvariant d = infer_diff_invariants(p.sp, p.qp, p.sp.spec.pre, DiffInvOptions{});
  const LoopInvariant& l = d.loops.at(0);
  const std::string x = p.sp.final_version.at("x");
  ASSERT_TRUE(l.deltas.count(x));
  ASSERT_FALSE(l.deltas.at(x).top);
  Term want = mul(var(l.counter), sub(mul(cst(2), param_n()), cst(1)));
  EXPECT_TRUE(poly_equal(l.deltas.at(x).expr, want)) << to_string(l.deltas.at(x).expr);
}

TEST(DiffInv, ConcreteChecksAtSmallN) {
  SolverConfig cfg;
  for (auto& f : inference_programs()) {
    Pipeline p = prepare(f);
    auto d = infer(p);
    if (!d) continue;
    std::mt19937_64 rng(5);
    for (std::int64_t n = 2; n <= 5; ++n)
      for (int k = 0; k < 3; ++k)
        EXPECT_EQ(concrete_check(p.sp, p.qp, p.sp.spec.pre, *d, n, rng, &cfg), "") << f << " N=" << n;
  }
}

TEST(DiffInv, InvariantsAreInductive) {
  for (auto& f : inference_programs()) {
    Pipeline p = prepare(f);
    DiffInvOptions opt;
    auto d = infer(p, opt);
    if (!d) continue;
    EXPECT_EQ(check_invariant_inductive(p.sp, p.qp, p.sp.spec.pre, *d, opt), Validity::Valid) << f;
  }
}

TEST(DiffInv, IndependentOfThePostcondition) {
  for (auto& f : inference_programs()) {
    Pipeline a = prepare(f);
    Pipeline b = prepare(f, "N >= 0");
    auto da = infer(a), db = infer(b);
    ASSERT_EQ(da.has_value(), db.has_value()) << f;
    if (!da) continue;
    EXPECT_EQ(describe(*da), describe(*db)) << f;
    ASSERT_EQ(da->facts.size(), db->facts.size()) << f;
    for (std::size_t k = 0; k < da->facts.size(); ++k) EXPECT_TRUE(same(da->facts[k], db->facts[k])) << f;
  }
}

TEST(DiffInv, EntryDeltasFromEqualityPreconditions) {
  Parsed p = parse_program(
      "// assume(forall i in [0,N) :: A[i] == N)\n"
      "// assume(s == 2*N)\n"
      "void f(int A[], int N) {\n int s;\n}\n"
      "// assert(true)\n");
  auto d = entry_deltas(p.program, p.spec.pre);
  ASSERT_TRUE(d.count("s"));
  EXPECT_TRUE(poly_equal(d.at("s"), cst(2)));
  ASSERT_TRUE(d.count("A"));
}

TEST(DiffInv, PreviousInstanceReplacesEveryN) {
  Pipeline p = prepare("c1/safe/square_steps.c");
  StmtP prev = previous_instance(p.sp.program.body);
  Program prog = p.sp.program;
  prog.body = prev;
  std::mt19937_64 rng(1);
  for (std::int64_t n = 2; n <= 5; ++n) {
    Env in = random_env(p.parsed.program, n, rng);
    Env out = test::final_values(p.sp, execute(prog, in));
    EXPECT_EQ(out.scalars["x"], (n - 1) * (n - 1) * (n - 1));
  }
}

TEST(Product, SignCheckBranchesAreSynced) {
  Pipeline p = prepare("c2/safe/sign_check.c");
  DiffInvariant d = infer_diff_invariants(p.sp, p.qp, p.sp.spec.pre, DiffInvOptions{});
  ASSERT_FALSE(d.branches.empty());
  for (auto& b : d.branches) EXPECT_TRUE(b.synced) << b.cond;
  ProductProgram prod = build_product(p.qp.q.body, previous_instance(p.sp.program.body));
  EXPECT_FALSE(prod.loops.empty());
}

TEST(DiffInv, DescribeMentionsEveryLoop) {
  Pipeline p = prepare("c3/safe/square_fill.c");
  DiffInvariant d = infer_diff_invariants(p.sp, p.qp, p.sp.spec.pre, DiffInvOptions{});
  auto lines = describe(d);
  EXPECT_GE(lines.size(), d.loops.size());
  EXPECT_EQ(index_param(0), "ix#0");
}
