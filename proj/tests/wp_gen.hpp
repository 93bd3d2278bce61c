#pragma once

#include <random>

#include "diffy/ast.hpp"

namespace diffy::test {

// Random loop-free code over x, y, A, B with indices kept inside [0, N).
struct WpGen {
  std::mt19937_64 rng;
  explicit WpGen(std::uint64_t seed) : rng(seed) {}

  static Program decls() {
    Program p;
    p.scalars = {"x", "y"};
    p.arrays = {{"A", 1}, {"B", 1}};
    return p;
  }

  int pick(int n) { return static_cast<int>(rng() % n); }

  Term index() {
    switch (pick(4)) {
      case 0: return cst(0);
      case 1: return sub(param_n(), cst(1));
      case 2: return mod_t(var("x"), param_n());
      default: return mod_t(add(var("y"), cst(1)), param_n());
    }
  }
  Term arr() { return avar(pick(2) ? "A" : "B", 1); }
  Term expr(int depth) {
    switch (depth <= 0 ? pick(4) : pick(7)) {
      case 0: return cst(pick(7) - 3);
      case 1: return var(pick(2) ? "x" : "y");
      case 2: return param_n();
      case 3: return select(arr(), {index()});
      case 4: return add(expr(depth - 1), expr(depth - 1));
      case 5: return sub(expr(depth - 1), expr(depth - 1));
      default: return mul(expr(depth - 1), cst(pick(3) + 1));
    }
  }
  Term cond() {
    static const Rel rels[] = {Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne, Rel::Gt, Rel::Ge};
    return cmp(rels[pick(6)], expr(1), expr(1));
  }
  StmtP stmt(int depth) {
    switch (depth <= 0 ? pick(2) : pick(4)) {
      case 0: return assign(pick(2) ? "x" : "y", expr(2));
      case 1: return store_stmt(pick(2) ? "A" : "B", {index()}, expr(2));
      case 2: return if_stmt(cond(), block(depth - 1), block(depth - 1));
      default: return block(depth - 1);
    }
  }
  StmtP block(int depth) {
    std::vector<StmtP> xs;
    for (int k = 0, n = 1 + pick(3); k < n; ++k) xs.push_back(stmt(depth));
    return seq(xs);
  }
  Term post() {
    switch (pick(4)) {
      case 0: return cond();
      case 1: return and_t(cond(), cond());
      case 2: return or_t(cond(), not_t(cond()));
      default: {
        Term i = var("q");
        Term body = cmp(pick(2) ? Rel::Ge : Rel::Ne, select(arr(), {i}), expr(1));
        return pick(2) ? forall_t("q", cst(0), param_n(), body) : exists_t("q", cst(0), param_n(), body);
      }
    }
  }
};

}  // namespace diffy::test
