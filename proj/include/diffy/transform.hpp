#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffy/ast.hpp"
#include "diffy/simplify.hpp"
#include "diffy/ssa.hpp"

namespace diffy {

struct TransformError : std::runtime_error {
  enum class Kind { PeelSubstitutionBlocked, UnsupportedReordering, UnsupportedIndexing, NegativePeel };
  Kind kind;
  TransformError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct Substitution {
  std::string var;  // version whose use was replaced
  Term value;       // its value after the earlier peels
  std::size_t loop; // index of the top-level loop whose truncated copy was rewritten
};

struct QAndPeel {
  Program q;     // Q_{N-1} after repair
  Program peel;  // peel(P_N) after summarization of residual loops
  StmtP raw_peel;  // peel before summarization
  std::vector<std::pair<StmtP, StmtP>> per_loop;  // (Q_L, R_L) per top-level loop
  std::vector<Substitution> substitutions;
  std::map<std::string, Term> effect;  // value of each version after the peel, over pre-peel values
  std::set<std::string> blocked;       // versions written by unsummarized peel loops
};

// Simplify every expression, using loop counter ranges.
StmtP simplify_stmt(const StmtP& s, const Context& ctx);

// Replace N by N-1 in every loop bound (nested ones included), nowhere else.
StmtP truncate_bounds(const StmtP& s);

class PeelBuilder {
 public:
  // Iterations lo..hi-1 of loop L: copies when hi-lo is constant, else a
  // residual loop over a fresh counter.
  StmtP lpeel(const Stmt& loop, const Term& lo, const Term& hi);
  // (Q_L, R_L) for a top-level loop.
  std::pair<StmtP, StmtP> q_and_peel_for_loop(const StmtP& loop);
  // Loop-free replacement of a residual loop, when its body is closed-formable.
  std::optional<StmtP> summarize_peel_loop(const StmtP& loop, const Context& ctx = Context(1));
  // Summarize every summarizable loop inside s, innermost first.
  StmtP summarize_all(const StmtP& s, const Context& ctx = Context(1));

  std::set<std::string> new_counters;

 private:
  int next_ = 0;
  std::string fresh_counter(const std::string& base);
  StmtP rename_counters(const StmtP& s);
  StmtP miss(const StmtP& s, const std::vector<Context::Range>& outer);
};

QAndPeel gen_q_and_peel(const SsaProgram& p);

}  // namespace diffy
