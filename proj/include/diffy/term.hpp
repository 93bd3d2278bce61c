#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffy {

// Sorts: integers, booleans and integer-valued arrays over k integer indices.
enum class Sort : std::uint8_t { Int, Bool, Array };

enum class Kind : std::uint8_t {
  Const,
  Var,
  Add,
  Mul,
  Div,
  Mod,
  Select,
  Store,
  Lambda,
  Ite,
  BoolConst,
  Cmp,
  Not,
  And,
  Or,
  Implies,
  Forall,
  Exists,
};

enum class Rel : std::uint8_t { Lt, Le, Gt, Ge, Eq, Ne };

struct Node;
using Term = std::shared_ptr<const Node>;

// Immutable term node. Terms are shared freely between threads.
struct Node {
  Kind kind;
  Sort sort;
  int arity = 0;  // index count for array-sorted terms
  Rel rel = Rel::Eq;
  std::int64_t value = 0;
  std::string name;                // Var name, or bound variable of a quantifier
  std::vector<std::string> params;  // Lambda parameters
  std::vector<Term> kids;
  std::size_t hash = 0;
};

struct TermError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Builders. Arithmetic builders do light constant folding only; use
// simplify() for normalization.
Term cst(std::int64_t v);
Term var(const std::string& name);
Term bvar(const std::string& name);  // boolean variable
Term avar(const std::string& name, int arity);
Term param_n();
Term add(const Term& a, const Term& b);
Term add(std::vector<Term> xs);
Term sub(const Term& a, const Term& b);
Term mul(const Term& a, const Term& b);
Term mul(std::vector<Term> xs);
Term neg(const Term& a);
Term div_t(const Term& a, const Term& b);
Term mod_t(const Term& a, const Term& b);
Term select(const Term& arr, std::vector<Term> idx);
Term store(const Term& arr, std::vector<Term> idx, const Term& val);
Term lambda(std::vector<std::string> params, const Term& body);
Term ite(const Term& c, const Term& a, const Term& b);
Term tru();
Term fls();
Term blit(bool b);
Term cmp(Rel r, const Term& a, const Term& b);
Term eq(const Term& a, const Term& b);
Term ne(const Term& a, const Term& b);
Term lt(const Term& a, const Term& b);
Term le(const Term& a, const Term& b);
Term gt(const Term& a, const Term& b);
Term ge(const Term& a, const Term& b);
Term not_t(const Term& a);
Term and_t(const Term& a, const Term& b);
Term and_t(std::vector<Term> xs);
Term or_t(const Term& a, const Term& b);
Term or_t(std::vector<Term> xs);
Term implies(const Term& a, const Term& b);
Term forall_t(const std::string& v, const Term& lo, const Term& hi, const Term& body);
Term exists_t(const std::string& v, const Term& lo, const Term& hi, const Term& body);
// lo <= t < hi
Term in_range(const Term& t, const Term& lo, const Term& hi);

// Rebuild a node of the same shape with new children.
Term with_kids(const Term& t, std::vector<Term> kids);

bool is_const(const Term& t, std::int64_t* v = nullptr);
bool is_true(const Term& t);
bool is_false(const Term& t);
bool is_var(const Term& t, const std::string& name);
bool is_quant(const Term& t);

// Total structural order; 0 iff structurally equal.
int compare(const Term& a, const Term& b);
bool same(const Term& a, const Term& b);
struct TermLess {
  bool operator()(const Term& a, const Term& b) const { return compare(a, b) < 0; }
};

std::set<std::string> free_vars(const Term& t);
bool occurs(const std::string& v, const Term& t);
bool mentions_prefix(const Term& t, const std::string& prefix);
std::size_t term_size(const Term& t);

// Capture-avoiding simultaneous substitution of free variables.
Term subst(const Term& t, const std::map<std::string, Term>& m);
Term subst1(const Term& t, const std::string& v, const Term& val);

// Replace every occurrence of a subterm (structural match, free occurrences).
Term replace_subterm(const Term& t, const Term& from, const Term& to);

// Conjunct list of a formula (flattens nested And).
std::vector<Term> conjuncts(const Term& f);

// Fresh names: per-thread counter so that a verification task is
// deterministic regardless of other tasks running concurrently.
std::string fresh_name(const std::string& base);
void reset_fresh_names();

// Pretty-printing in the annotation syntax (re-parseable).
std::string to_string(const Term& t);
std::string rel_str(Rel r);

}  // namespace diffy
