#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "diffy/ast.hpp"
#include "diffy/simplify.hpp"
#include "diffy/solver.hpp"

namespace diffy {

struct LogicError : std::runtime_error {
  enum class Kind { LoopInCode, QeIncomplete };
  Kind kind;
  LogicError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct FormulaDiff {
  Term phi_prime;  // iterated conjunctions truncated to N-1 iterations
  Term delta_phi;  // the last iteration of each
};

// Split phi = /\_{i<N} rho_i into (/\_{i<N-1} rho_i, rho_{N-1}). Conjuncts
// without that shape stay in phi_prime.
FormulaDiff formula_diff(const Term& phi);

// Split universal (and existential) quantifiers whose body reads a store at
// the range boundary hi-1 or lo into the shorter range plus the boundary
// instance. At most `bound` splits are made.
Term split_boundary(const Term& f, int bound = 64);

// Weakest precondition of loop-free code. Returns nullopt when the result
// still carries more than `bound` unresolved conditionals.
std::optional<Term> wp(const Term& post, const StmtP& code, const Context& ctx = Context(1),
                       int bound = 64);

// Elimination of a program copy's variables by equalities. Arrays are
// eliminated only at reads whose indices are provably inside the domain.
struct Elim {
  Term value;               // scalar term, or array term (lambda / variable)
  std::vector<Term> lo, hi; // per-dimension domain [lo, hi) for arrays
};

// Substitute the eliminated symbols; returns nullopt if any remains.
std::optional<Term> qe_by_substitution(const std::set<std::string>& vars, const Term& f,
                                       const std::map<std::string, Elim>& d, const Context& ctx);

// {pre} code {post} for all N >= nmin.
SolverVerdict check_hoare_loopfree(const Term& pre, const StmtP& code, const Term& post,
                                   const SolverConfig& cfg, std::int64_t nmin = 1);

}  // namespace diffy
