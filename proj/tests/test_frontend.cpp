#include <gtest/gtest.h>

#include "diffy/frontend.hpp"
#include "support.hpp"

using namespace diffy;

namespace {

bool has_kind(const std::vector<Diagnostic>& ds, Diagnostic::Kind k) {
  for (auto& d : ds)
    if (d.kind == k) return true;
  return false;
}

}  // namespace

TEST(Parse, SquareStepsHasTwoTopLevelLoopsBoundedByN) {
  Parsed p = test::load("c1/safe/square_steps.c");
  auto top = items(p.program.body);
  std::vector<StmtP> loops;
  for (auto& s : top)
    if (s->kind == SKind::For) loops.push_back(s);
  ASSERT_EQ(loops.size(), 2u);
  for (auto& l : loops) EXPECT_TRUE(is_var(l->rhs, "N"));
  EXPECT_EQ(p.program.arrays.size(), 2u);
  EXPECT_TRUE(p.program.scalars.count("x"));
  EXPECT_TRUE(is_true(p.spec.pre));
  EXPECT_EQ(p.spec.post->kind, Kind::Forall);
}

TEST(Parse, EmptyProgram) {
  Parsed p = parse_program("// assume(true)\nvoid f(int N) {\n}\n// assert(true)\n");
  EXPECT_TRUE(is_empty(p.program.body));
  EXPECT_TRUE(is_true(p.spec.pre));
  EXPECT_TRUE(is_true(p.spec.post));
  EXPECT_TRUE(validate(p.program).empty());
}

TEST(Parse, AssigningALoopCounterIsAGrammarViolation) {
  const char* src =
      "void f(int N) {\n"
      "  int x;\n"
      "  for (int i = 0; i < N; i++) { i = i + 1; x = i; }\n"
      "}\n";
  try {
    parse_program(src);
    FAIL() << "accepted a counter assignment";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind, ParseError::Kind::Grammar);
    EXPECT_EQ(e.line, 3);
  }
}

TEST(Parse, SyntaxErrorsCarryAPosition) {
  try {
    parse_program("void f(int N) {\n  int x;\n  x = (1 + ;\n}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind, ParseError::Kind::Syntax);
    EXPECT_EQ(e.line, 3);
  }
}

TEST(Parse, WhileLoopsAreRejected) {
  EXPECT_THROW(parse_program("void f(int N) {\n int x;\n while (x < N) x = x + 1;\n}\n"), ParseError);
}

TEST(Parse, PrettyPrintRoundTrips) {
  for (auto& f : test::corpus_files()) {
    Parsed a = test::load(f);
    std::string text = to_source(a.program, &a.spec);
    Parsed b = parse_program(text);
    EXPECT_TRUE(same_stmt(a.program.body, b.program.body)) << f;
    EXPECT_TRUE(same(a.spec.pre, b.spec.pre)) << f;
    EXPECT_TRUE(same(a.spec.post, b.spec.post)) << f;
    EXPECT_EQ(a.program.arrays, b.program.arrays) << f;
    EXPECT_EQ(to_source(b.program, &b.spec), text) << f;
  }
}

TEST(Validate, FillCountIsClean) {
  Parsed p = test::load("c3/safe/fill_count.c");
  EXPECT_TRUE(validate(p.program).empty());
  EXPECT_EQ(nesting_depth(p.program), 2);
}

TEST(Validate, CorpusProgramsHaveNoErrors) {
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    for (auto& d : validate(p.program)) EXPECT_FALSE(is_error(d)) << f << ": " << d.message;
  }
}

TEST(Validate, UpperBoundUsingASiblingCounterIsAScopeViolation) {
  Program p;
  p.arrays["A"] = 1;
  p.scalars = {"i", "j", "k", "l"};
  p.counters = {"i", "j", "k", "l"};
  Term a = avar("A", 1);
  StmtP first = for_stmt("i", param_n(), for_stmt("j", param_n(), store_stmt("A", {var("j")}, cst(0))));
  StmtP second = for_stmt("k", param_n(), for_stmt("l", var("j"), store_stmt("A", {var("l")}, cst(1))));
  p.body = seq({first, second});
  auto ds = validate(p);
  EXPECT_TRUE(has_kind(ds, Diagnostic::Kind::ScopeViolation));
}

TEST(Validate, ReadingIndexNIsAnIndexWarning) {
  Parsed p = parse_program("void f(int A[], int N) {\n int x;\n x = A[N];\n}\n");
  auto ds = validate(p.program);
  ASSERT_TRUE(has_kind(ds, Diagnostic::Kind::IndexWarning));
  for (auto& d : ds) EXPECT_FALSE(is_error(d));
}

TEST(Validate, CounterInvariantsHoldOnAcceptedPrograms) {
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    std::vector<std::string> seen;
    std::function<void(const StmtP&, std::set<std::string>)> walk = [&](const StmtP& s,
                                                                        std::set<std::string> bound) {
      if (s->kind == SKind::For) {
        for (auto& v : free_vars(s->rhs)) EXPECT_TRUE(v == "N" || bound.count(v)) << f;
        seen.push_back(s->name);
        bound.insert(s->name);
      }
      for (auto& b : s->body) walk(b, bound);
    };
    walk(p.program.body, {});
    std::set<std::string> uniq(seen.begin(), seen.end());
    EXPECT_EQ(uniq.size(), seen.size()) << f;
  }
}
