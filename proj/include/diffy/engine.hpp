#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffy/ast.hpp"
#include "diffy/diffinv.hpp"
#include "diffy/interp.hpp"
#include "diffy/solver.hpp"

namespace diffy {

enum class Verdict { Verified, Falsified, Unknown };
std::string verdict_name(Verdict v);

struct EngineOptions {
  std::int64_t base_width = 1;   // base case checks N = 1..M
  std::int64_t base_bound = 8;   // falsification sweep N = 1..B
  std::size_t unroll_budget = kDefaultUnrollBudget;
  double timeout_s = 60;
  int strengthen_cap = 10;
  int wp_split_bound = 64;
  int max_base_bump = 3;         // extra base cases when the precondition is not inherited
  SolverConfig solver;
};

struct Strengthening {
  Term chi_prime;  // obligation on the state before the peel (Q at N-1)
  Term chi_prev;   // the same fact on P at N-1
  Term chi;        // new conjunct of the invariant on P at N
};

struct VerifyResult {
  Verdict verdict = Verdict::Unknown;
  std::string message;  // one line for the user
  std::string reason;   // why Unknown

  std::int64_t base_width = 1;
  int iterations = 0;   // strengthening iterations
  int recursion_depth = 0;
  std::vector<Strengthening> strengthenings;
  std::optional<DiffInvariant> invariant;
  Term psi_prime;
  Term step_pre;

  std::optional<Env> witness;
  std::int64_t witness_n = 0;
  bool replayed = false;

  std::string ssa_source, q_source, peel_source;
  double millis = 0;
  std::size_t solver_queries = 0;
};

// Prove {pre} p {post} for every N >= 1.
VerifyResult verify(const Program& p, const Spec& spec, const EngineOptions& opt);

// Posts with existential conjuncts: witness instantiation first, then the
// direct pipeline.
VerifyResult verify_existential(const Program& p, const Spec& spec, const EngineOptions& opt);

// Picks verify or verify_existential and declines unsupported programs.
VerifyResult verify_program(const Program& p, const Spec& spec, const EngineOptions& opt);

// Shift a formula over P_{N-1} onto Q_{N-1}: f(N-1) with every state
// variable rewritten by v - delta. Conjuncts that keep P symbols are dropped.
Term shift_to_q(const Term& f, const Program& decls, const DiffInvariant& d);

// Inverse direction, for strengthening: a formula over Q_{N-1} as a formula
// over P at N. Returns nullopt when some variable has no known difference.
std::optional<Term> lift_to_p(const Term& chi_prime, const Program& decls, const DiffInvariant& d);

}  // namespace diffy
