#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffy/term.hpp"

namespace diffy {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

struct SolverConfig {
  std::string path;  // empty: $DIFFY_SOLVER, then z3 on PATH
  int timeout_ms = 10000;
  std::optional<Clock::time_point> deadline;  // global budget of the running task
};

// Resolve the solver binary (explicit path, $DIFFY_SOLVER, then PATH).
std::string resolve_solver_path(const std::string& explicit_path);

enum class SatStatus { Sat, Unsat, Unknown };

struct SatResult {
  SatStatus status = SatStatus::Unknown;
  std::map<std::string, std::int64_t> values;  // requested integer terms by SMT text
  std::string reason;
};

// SMT-LIB2 text for the conjunction of `assertions`; `values` are integer
// terms requested with get-value after a sat answer.
std::string emit_smtlib(const std::vector<Term>& assertions, const std::vector<Term>& values = {});
std::string smt_term(const Term& t);
bool is_nonlinear(const Term& t);

// Run the solver on a script.
SatResult solve(const std::string& script, const SolverConfig& cfg);

enum class Validity { Valid, Invalid, Unknown };

struct SolverVerdict {
  Validity status = Validity::Unknown;
  std::map<std::string, std::int64_t> model;  // integer symbols, including N when present
  std::string reason;
};

// Is hyp => goal valid? On Unknown, retries with quantifier instantiation.
// `model_vars` are integer symbols reported for Invalid answers.
SolverVerdict check_valid(const Term& hyp, const Term& goal, const SolverConfig& cfg,
                          const std::vector<std::string>& model_vars = {});

// Satisfiability of a conjunction with integer values of the given terms.
SatResult check_sat(const std::vector<Term>& fs, const SolverConfig& cfg,
                    const std::vector<Term>& values = {});

// Quantifier instantiation used by the Unknown fallback: top-level
// existentials are skolemized, universals instantiated with ground index
// terms, range bounds, 0, N-1 and N-2 for `rounds` rounds.
std::vector<Term> instantiate(const std::vector<Term>& fs, int rounds, bool* had_universal);

// Statistics for diagnostics.
struct SolverStats {
  std::size_t queries = 0;
  double millis = 0;
};
SolverStats& solver_stats();  // per thread

}  // namespace diffy
