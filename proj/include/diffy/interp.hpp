#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffy/ast.hpp"
#include "diffy/solver.hpp"

namespace diffy {

struct InterpError : std::runtime_error {
  enum class Kind { IndexOutOfBounds, DivisionByZero, Overflow, UnrollBudgetExceeded, Unbound, Unsupported };
  Kind kind;
  InterpError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Array of `dims` dimensions, each of extent n, stored row-major.
struct ArrayVal {
  int dims = 1;
  std::vector<std::int64_t> cells;
};

struct Env {
  std::int64_t n = 1;
  std::map<std::string, std::int64_t> scalars;
  std::map<std::string, ArrayVal> arrays;

  bool operator==(const Env& o) const;
};

std::size_t flat_index(std::int64_t n, const std::vector<std::int64_t>& idx);
std::string env_to_string(const Env& e);

constexpr std::size_t kDefaultUnrollBudget = 100000;

// Concrete execution. Counters are stored as scalars.
Env execute(const Program& p, Env env, std::size_t budget = kDefaultUnrollBudget);
void execute_stmt(const StmtP& s, Env& env, std::size_t& budget);

// Concrete evaluation; `locals` bind quantifier and lambda variables.
std::int64_t eval_int(const Term& t, const Env& env,
                      const std::map<std::string, std::int64_t>& locals = {});
bool eval_bool(const Term& t, const Env& env,
               const std::map<std::string, std::int64_t>& locals = {});

// Random inputs for every non-counter scalar and array of p, values in [lo, hi].
Env random_env(const Program& p, std::int64_t n, std::mt19937_64& rng, std::int64_t lo = -4,
               std::int64_t hi = 4);

// Random environment satisfying `pre`: pattern-directed assignment of the
// equality conjuncts, random retries, and finally a solver model.
std::optional<Env> random_env_satisfying(const Program& p, const Term& pre, std::int64_t n,
                                         std::mt19937_64& rng, const SolverConfig* solver = nullptr);

// ---------------------------------------------------------------------------
// Symbolic execution at a concrete N. Input scalars are symbols named after
// the variable; input array cells are symbols "A@i@j".

struct SymArray {
  int dims = 1;
  std::int64_t n = 1;
  std::vector<Term> cells;
};

struct SymState {
  std::int64_t n = 1;
  std::map<std::string, Term> scalars;
  std::map<std::string, SymArray> arrays;
  std::vector<Term> defs;  // d#k == term side conditions
  std::shared_ptr<std::size_t> next_def = std::make_shared<std::size_t>(0);
  bool define_large = true;  // abbreviate large terms by definitions
  std::size_t budget = kDefaultUnrollBudget;
  // Invoked at every loop-head visit (before the guard) with the counter value.
  std::function<void(const Stmt& loop, std::int64_t iter, const SymState& st)> on_loop_head;
};

std::string cell_symbol(const std::string& array, const std::vector<std::int64_t>& idx);

// Fresh symbolic inputs for the program's variables.
SymState symbolic_inputs(const Program& p, std::int64_t n);
void sym_exec(const StmtP& s, SymState& st);
// Value of a term in the symbolic state; quantifiers over concrete ranges
// are expanded.
Term sym_eval(const Term& t, const SymState& st, const std::map<std::string, Term>& locals = {});

struct FixedResult {
  Validity status = Validity::Unknown;
  std::optional<Env> witness;  // input environment violating the post
  bool replayed = false;        // execute confirmed the violation
  std::string reason;
};

// Decide {pre} p {post} at N = n by full unrolling.
FixedResult check_fixed_n(const Term& pre, const Program& p, const Term& post, std::int64_t n,
                          const SolverConfig& cfg, std::size_t budget = kDefaultUnrollBudget);

}  // namespace diffy
