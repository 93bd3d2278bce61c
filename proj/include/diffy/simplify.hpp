#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diffy/term.hpp"

namespace diffy {

// Checked 64-bit integer helpers; overflow throws TermError.
std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);
std::int64_t euclid_div(std::int64_t a, std::int64_t b);
std::int64_t euclid_mod(std::int64_t a, std::int64_t b);

// A monomial is a sorted product of atom powers.
using Mono = std::vector<std::pair<Term, int>>;
struct MonoLess {
  bool operator()(const Mono& a, const Mono& b) const;
};

// Polynomial with integer coefficients over arbitrary non-arithmetic atoms.
class Poly {
 public:
  std::map<Mono, std::int64_t, MonoLess> terms;

  static Poly constant(std::int64_t c);
  static Poly atom(const Term& t);

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly scale(std::int64_t c) const;

  bool is_zero() const { return terms.empty(); }
  bool is_const(std::int64_t* v = nullptr) const;
  std::int64_t const_part() const;
  int degree() const;
  int degree_in(const Term& atom) const;
  // p = coef * atom + rest, with atom absent from coef and rest.
  bool linear_in(const Term& atom, Poly* coef, Poly* rest) const;
  // Coefficients of p as a polynomial in atom: result[k] multiplies atom^k.
  std::vector<Poly> coefficients_in(const Term& atom) const;
  Poly subst_atom(const Term& atom, const Poly& val) const;
  std::vector<Term> atoms() const;
  std::int64_t content() const;  // gcd of coefficients (0 for the zero poly)

  Term to_term() const;
};

// Polynomial view of an integer term. Non-arithmetic subterms become atoms.
Poly to_poly(const Term& t);

// Bounds context for the linear prover: integer variables with inclusive
// ranges (innermost last) plus a lower bound on N.
class Context {
 public:
  struct Range {
    std::string v;
    Term lo;  // inclusive
    Term hi;  // inclusive
  };

  std::int64_t nmin = 1;
  std::vector<Range> ranges;

  Context() = default;
  explicit Context(std::int64_t n_lower) : nmin(n_lower) {}

  Context with(const std::string& v, const Term& lo_incl, const Term& hi_incl) const;
  // Counter of a loop "for (v = 0; v < ub; v++)".
  Context with_counter(const std::string& v, const Term& ub) const;

  bool prove_nonneg(const Poly& p) const;
  bool prove_le(const Term& a, const Term& b) const;
  bool prove_lt(const Term& a, const Term& b) const;
  bool prove_ne(const Term& a, const Term& b) const;
  bool prove_eq(const Term& a, const Term& b) const;

 private:
  bool prove_nonneg_upto(const Poly& p, std::size_t nranges, int depth) const;
};

Term simplify(const Term& t, const Context& ctx);
Term simplify(const Term& t);

// Substitute N by an integer term and simplify.
Term subst_n(const Term& t, const Term& by);

}  // namespace diffy
