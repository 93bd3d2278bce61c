#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "diffy/term.hpp"

namespace diffy {

enum class SKind : std::uint8_t { Seq, Assign, Store, ArrayDef, If, For };

struct Stmt;
using StmtP = std::shared_ptr<const Stmt>;

// Statement node. Field use by kind:
//   Seq       body = items
//   Assign    name := rhs
//   Store     name[idx...] := rhs
//   ArrayDef  name := rhs (array-sorted term: store chain, lambda, array var)
//   If        rhs = condition, body = {then, else}
//   For       name = counter, rhs = upper bound, body = {loop body}
struct Stmt {
  SKind kind = SKind::Seq;
  std::string name;
  std::vector<Term> idx;
  Term rhs;
  std::vector<StmtP> body;
};

StmtP seq(std::vector<StmtP> items);
StmtP assign(const std::string& x, const Term& e);
StmtP store_stmt(const std::string& a, std::vector<Term> idx, const Term& v);
StmtP array_def(const std::string& a, const Term& t);
StmtP if_stmt(const Term& c, const StmtP& then_s, const StmtP& else_s);
StmtP for_stmt(const std::string& counter, const Term& ub, const StmtP& body);

// Flattened list of statements of a Seq (nested Seqs are spliced).
std::vector<StmtP> items(const StmtP& s);
bool is_empty(const StmtP& s);

struct Program {
  std::set<std::string> scalars;          // includes counters
  std::set<std::string> counters;
  std::map<std::string, int> arrays;      // name -> number of dimensions (each of size N)
  StmtP body;
  std::vector<std::string> unsupported;   // constructs the engine declines (e.g. float)
};

struct Spec {
  Term pre;
  Term post;
};

// Term for a program variable: array variables get their arity.
Term var_term(const Program& p, const std::string& name);

// Rewrite every expression of a statement with f. Loop upper bounds and if
// conditions are included; binders (counters) are left alone.
StmtP map_exprs(const StmtP& s, const std::function<Term(const Term&)>& f);
StmtP subst_stmt(const StmtP& s, const std::map<std::string, Term>& m);

// Variables written / read anywhere inside s (counters excluded from writes).
std::set<std::string> written_vars(const StmtP& s);
std::set<std::string> read_vars(const StmtP& s);
bool has_loop(const StmtP& s);
int nesting_depth(const StmtP& s);
int nesting_depth(const Program& p);
std::size_t stmt_count(const StmtP& s);

// Re-parseable C-like rendering.
std::string to_source(const StmtP& s, int indent = 0);
std::string to_source(const Program& p, const Spec* spec = nullptr);

bool same_stmt(const StmtP& a, const StmtP& b);

}  // namespace diffy
