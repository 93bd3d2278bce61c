#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffy/ast.hpp"
#include "diffy/solver.hpp"
#include "diffy/ssa.hpp"
#include "diffy/transform.hpp"

namespace diffy {

struct DiffInvError : std::runtime_error {
  enum class Kind { StructureMismatch, NoInvariant, PreNotInherited };
  Kind kind;
  DiffInvError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Name of the k-th index parameter of array deltas.
std::string index_param(int k);

// Difference vQ - vP. For arrays the expression ranges over index_param(0..d-1)
// and holds on the common domain [0, N-1)^d.
struct Delta {
  bool top = true;
  Term expr;
  int dims = 0;  // 0 for scalars
};

struct LoopInvariant {
  std::string counter;
  std::vector<std::string> outer;  // enclosing counters, outermost first
  Term ub;
  std::map<std::string, Delta> deltas;  // at the loop head, in terms of the counter
};

struct BranchPair {
  std::string cond;  // P-side condition text
  bool synced = false;
};

// Product of Q_{N-1} and P_{N-1}: loops paired by counter.
struct ProductProgram {
  StmtP q;
  StmtP p;
  std::vector<std::string> loops;  // counters in program order
  std::map<std::string, std::vector<std::string>> enclosing;
  std::vector<BranchPair> branches;  // syntactically paired conditionals
};

ProductProgram build_product(const StmtP& q, const StmtP& p);

struct DiffInvariant {
  std::int64_t nmin = 2;                 // inference is valid for N >= nmin
  std::map<std::string, Term> delta0;   // entry difference of inputs (non-zero ones)
  std::vector<LoopInvariant> loops;     // program order
  std::map<std::string, Delta> exit;    // every version at program exit
  std::vector<Term> facts;              // Q-side facts at exit (free of P symbols)
  std::vector<BranchPair> branches;     // decisions of the product construction
};

struct DiffInvOptions {
  std::int64_t nmin = 2;
  SolverConfig solver;
  std::size_t budget = 100000;
  int samples = 5;
};

// P_{N-1}: the SSA program with N-1 for N everywhere.
StmtP previous_instance(const StmtP& body);

// Entry differences derived from equality conjuncts of the precondition.
std::map<std::string, Term> entry_deltas(const Program& p, const Term& pre);

// Infer invariants between Q_{N-1} (qp.q) and P_{N-1}. Independent of the post.
DiffInvariant infer_diff_invariants(const SsaProgram& sp, const QAndPeel& qp, const Term& pre,
                                    const DiffInvOptions& opt);

// Re-verify given loop deltas without refinement.
Validity check_invariant_inductive(const SsaProgram& sp, const QAndPeel& qp, const Term& pre,
                                   const DiffInvariant& d, const DiffInvOptions& opt);

// Joint concrete run at N = n from a random input satisfying pre; checks
// every loop-head delta and the exit deltas. Returns an empty string on
// success, otherwise a description of the first violation.
std::string concrete_check(const SsaProgram& sp, const QAndPeel& qp, const Term& pre,
                           const DiffInvariant& d, std::int64_t n, std::mt19937_64& rng,
                           const SolverConfig* solver = nullptr);

// Human-readable invariants: "x$2' - x$2 == ..." per loop head and exit.
std::vector<std::string> describe(const DiffInvariant& d);

}  // namespace diffy
