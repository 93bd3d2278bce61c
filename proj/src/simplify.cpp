#include "diffy/simplify.hpp"

#include <algorithm>
#include <numeric>

namespace diffy {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw TermError("integer overflow in addition");
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw TermError("integer overflow in multiplication");
  return r;
}

std::int64_t euclid_mod(std::int64_t a, std::int64_t b) {
  if (b == 0) throw TermError("division by zero");
  std::int64_t r = a % b;
  if (r < 0) r += (b < 0 ? -b : b);
  return r;
}

std::int64_t euclid_div(std::int64_t a, std::int64_t b) {
  if (b == 0) throw TermError("division by zero");
  return (a - euclid_mod(a, b)) / b;
}

namespace {

int mono_degree(const Mono& m) {
  int d = 0;
  for (auto& [a, e] : m) d += e;
  return d;
}

Mono mono_mul(const Mono& a, const Mono& b) {
  Mono out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && compare(a[i].first, b[j].first) < 0)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || compare(b[j].first, a[i].first) < 0) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

void add_term(Poly& p, const Mono& m, std::int64_t c) {
  if (c == 0) return;
  auto it = p.terms.find(m);
  if (it == p.terms.end()) {
    p.terms.emplace(m, c);
  } else {
    it->second = checked_add(it->second, c);
    if (it->second == 0) p.terms.erase(it);
  }
}

}  // namespace

bool MonoLess::operator()(const Mono& a, const Mono& b) const {
  int da = mono_degree(a), db = mono_degree(b);
  if (da != db) return da > db;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (int c = compare(a[i].first, b[i].first)) return c < 0;
    if (a[i].second != b[i].second) return a[i].second > b[i].second;
  }
  return a.size() < b.size();
}

Poly Poly::constant(std::int64_t c) {
  Poly p;
  add_term(p, {}, c);
  return p;
}

Poly Poly::atom(const Term& t) {
  Poly p;
  p.terms.emplace(Mono{{t, 1}}, 1);
  return p;
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  for (auto& [m, c] : o.terms) add_term(r, m, c);
  return r;
}

Poly Poly::operator-(const Poly& o) const { return *this + o.scale(-1); }

Poly Poly::operator*(const Poly& o) const {
  Poly r;
  for (auto& [m1, c1] : terms)
    for (auto& [m2, c2] : o.terms) add_term(r, mono_mul(m1, m2), checked_mul(c1, c2));
  return r;
}

Poly Poly::scale(std::int64_t c) const {
  Poly r;
  if (c == 0) return r;
  for (auto& [m, k] : terms) r.terms.emplace(m, checked_mul(k, c));
  return r;
}

bool Poly::is_const(std::int64_t* v) const {
  if (terms.empty()) {
    if (v) *v = 0;
    return true;
  }
  if (terms.size() == 1 && terms.begin()->first.empty()) {
    if (v) *v = terms.begin()->second;
    return true;
  }
  return false;
}

std::int64_t Poly::const_part() const {
  auto it = terms.find(Mono{});
  return it == terms.end() ? 0 : it->second;
}

int Poly::degree() const {
  int d = 0;
  for (auto& [m, c] : terms) d = std::max(d, mono_degree(m));
  return d;
}

int Poly::degree_in(const Term& atom) const {
  int d = 0;
  for (auto& [m, c] : terms)
    for (auto& [a, e] : m)
      if (same(a, atom)) d = std::max(d, e);
  return d;
}

std::vector<Poly> Poly::coefficients_in(const Term& atom) const {
  std::vector<Poly> out(static_cast<std::size_t>(degree_in(atom)) + 1);
  for (auto& [m, c] : terms) {
    Mono rest;
    int e = 0;
    for (auto& f : m) {
      if (same(f.first, atom))
        e = f.second;
      else
        rest.push_back(f);
    }
    add_term(out[static_cast<std::size_t>(e)], rest, c);
  }
  return out;
}

bool Poly::linear_in(const Term& atom, Poly* coef, Poly* rest) const {
  auto cs = coefficients_in(atom);
  if (cs.size() > 2) return false;
  if (rest) *rest = cs[0];
  if (coef) *coef = cs.size() > 1 ? cs[1] : Poly{};
  return true;
}

Poly Poly::subst_atom(const Term& atom, const Poly& val) const {
  auto cs = coefficients_in(atom);
  Poly r;
  Poly pw = Poly::constant(1);
  for (std::size_t k = 0; k < cs.size(); ++k) {
    r = r + cs[k] * pw;
    pw = pw * val;
  }
  return r;
}

std::vector<Term> Poly::atoms() const {
  std::vector<Term> out;
  for (auto& [m, c] : terms)
    for (auto& [a, e] : m) {
      bool seen = false;
      for (auto& x : out) seen = seen || same(x, a);
      if (!seen) out.push_back(a);
    }
  return out;
}

std::int64_t Poly::content() const {
  std::int64_t g = 0;
  for (auto& [m, c] : terms) g = std::gcd(g, c < 0 ? -c : c);
  return g;
}

Term Poly::to_term() const {
  std::vector<Term> sum;
  for (auto& [m, c] : terms) {
    std::vector<Term> fs;
    if (c != 1 || m.empty()) fs.push_back(cst(c));
    for (auto& [a, e] : m)
      for (int k = 0; k < e; ++k) fs.push_back(a);
    sum.push_back(fs.size() == 1 ? fs[0] : mul(fs));
  }
  if (sum.empty()) return cst(0);
  if (sum.size() == 1) return sum[0];
  return add(sum);
}

Poly to_poly(const Term& t) {
  switch (t->kind) {
    case Kind::Const: return Poly::constant(t->value);
    case Kind::Add: {
      Poly r;
      for (auto& k : t->kids) r = r + to_poly(k);
      return r;
    }
    case Kind::Mul: {
      Poly r = Poly::constant(1);
      for (auto& k : t->kids) r = r * to_poly(k);
      return r;
    }
    default: return Poly::atom(t);
  }
}

// ---------------------------------------------------------------------------
// Linear bounds prover

Context Context::with(const std::string& v, const Term& lo_incl, const Term& hi_incl) const {
  Context c = *this;
  c.ranges.push_back({v, lo_incl, hi_incl});
  return c;
}

Context Context::with_counter(const std::string& v, const Term& ub) const {
  return with(v, cst(0), simplify(sub(ub, cst(1))));
}

bool Context::prove_nonneg(const Poly& p) const { return prove_nonneg_upto(p, ranges.size(), 0); }

bool Context::prove_nonneg_upto(const Poly& p, std::size_t nranges, int depth) const {
  if (depth > 6) return false;
  std::int64_t c;
  if (p.is_const(&c)) return c >= 0;
  Poly cur = p;
  for (std::size_t k = nranges; k-- > 0;) {
    const Range& r = ranges[k];
    Term a = var(r.v);
    if (cur.degree_in(a) == 0) continue;
    Poly coef, rest;
    if (!cur.linear_in(a, &coef, &rest)) return false;
    if (prove_nonneg_upto(coef, k, depth + 1)) {
      cur = rest + coef * to_poly(r.lo);
    } else if (prove_nonneg_upto(coef.scale(-1), k, depth + 1)) {
      cur = rest + coef * to_poly(r.hi);
    } else {
      return false;
    }
  }
  Term n = param_n();
  for (auto& a : cur.atoms())
    if (!same(a, n)) return false;
  // N >= nmin: write N = nmin + t with t >= 0 and require nonnegative coefficients.
  Term t = var("%t");
  Poly shifted = cur.subst_atom(n, Poly::constant(nmin) + Poly::atom(t));
  for (auto& [m, k] : shifted.terms)
    if (k < 0) return false;
  return true;
}

bool Context::prove_le(const Term& a, const Term& b) const {
  return prove_nonneg(to_poly(simplify(b)) - to_poly(simplify(a)));
}
bool Context::prove_lt(const Term& a, const Term& b) const {
  return prove_nonneg(to_poly(simplify(b)) - to_poly(simplify(a)) - Poly::constant(1));
}
bool Context::prove_ne(const Term& a, const Term& b) const {
  Poly d = to_poly(simplify(a)) - to_poly(simplify(b));
  return prove_nonneg(d - Poly::constant(1)) || prove_nonneg(d.scale(-1) - Poly::constant(1));
}
bool Context::prove_eq(const Term& a, const Term& b) const {
  return (to_poly(simplify(a)) - to_poly(simplify(b))).is_zero();
}

// ---------------------------------------------------------------------------
// Simplifier

namespace {

bool mono_has_non_n(const Mono& m) {
  for (auto& [a, e] : m)
    if (!(a->kind == Kind::Var && a->name == "N")) return true;
  return false;
}

Term canon_cmp(Poly d, Rel r, const Context& ctx) {
  // d r 0 with r in {Le, Eq}
  std::int64_t c;
  if (d.is_const(&c)) return blit(r == Rel::Le ? c <= 0 : c == 0);
  if (r == Rel::Le) {
    if (ctx.prove_nonneg(d.scale(-1))) return tru();
    if (ctx.prove_nonneg(d - Poly::constant(1))) return fls();
  } else {
    if (ctx.prove_nonneg(d - Poly::constant(1)) || ctx.prove_nonneg(d.scale(-1) - Poly::constant(1)))
      return fls();
  }
  std::int64_t g = d.content();
  if (g > 1) {
    Poly q;
    for (auto& [m, k] : d.terms) q.terms.emplace(m, k / g);
    d = q;
  }
  Poly lhs, rhs;
  for (auto& [m, k] : d.terms) {
    if (mono_has_non_n(m))
      lhs.terms.emplace(m, k);
  }
  if (lhs.is_zero()) {
    for (auto& [m, k] : d.terms)
      if (!m.empty()) lhs.terms.emplace(m, k);
  }
  rhs = (d - lhs).scale(-1);
  if (r == Rel::Eq && lhs.terms.begin()->second < 0) {
    lhs = lhs.scale(-1);
    rhs = rhs.scale(-1);
  }
  return cmp(r, lhs.to_term(), rhs.to_term());
}

bool poly_equal(const Term& a, const Term& b) { return (to_poly(a) - to_poly(b)).is_zero(); }

bool poly_differ(const Term& a, const Term& b, const Context& ctx) {
  Poly d = to_poly(a) - to_poly(b);
  std::int64_t c;
  if (d.is_const(&c)) return c != 0;
  return ctx.prove_nonneg(d - Poly::constant(1)) ||
         ctx.prove_nonneg(d.scale(-1) - Poly::constant(1));
}

Term simp(const Term& t, const Context& ctx);

// Merge monomials c*ite(C,a,b) sharing a condition; push a residual sum into
// a lone ite when that lets the branches collapse.
Term arith_from_poly(const Poly& p, const Context& ctx) {
  std::vector<std::pair<Term, std::int64_t>> ites;  // ite atom, coefficient
  Poly rest;
  for (auto& [m, k] : p.terms) {
    if (m.size() == 1 && m[0].second == 1 && m[0].first->kind == Kind::Ite)
      ites.emplace_back(m[0].first, k);
    else
      rest.terms.emplace(m, k);
  }
  if (ites.empty()) return p.to_term();
  // group by condition
  std::vector<std::pair<Term, std::pair<Poly, Poly>>> groups;
  for (auto& [it, k] : ites) {
    const Term& c = it->kids[0];
    bool found = false;
    for (auto& g : groups) {
      if (same(g.first, c)) {
        g.second.first = g.second.first + to_poly(it->kids[1]).scale(k);
        g.second.second = g.second.second + to_poly(it->kids[2]).scale(k);
        found = true;
        break;
      }
    }
    if (!found)
      groups.push_back({c, {to_poly(it->kids[1]).scale(k), to_poly(it->kids[2]).scale(k)}});
  }
  if (groups.size() == 1) {
    Poly a = groups[0].second.first + rest;
    Poly b = groups[0].second.second + rest;
    Term ta = simp(a.to_term(), ctx), tb = simp(b.to_term(), ctx);
    if (same(ta, tb)) return ta;
    if (rest.is_zero()) return ite(groups[0].first, ta, tb);
  }
  Poly out = rest;
  for (auto& g : groups) {
    Term ta = simp(g.second.first.to_term(), ctx);
    Term tb = simp(g.second.second.to_term(), ctx);
    Term it = same(ta, tb) ? ta : ite(g.first, ta, tb);
    out = out + to_poly(it);
  }
  return out.to_term();
}

Term simp_select(Term arr, std::vector<Term> idx, const Context& ctx) {
  for (int guard = 0; guard < 100000; ++guard) {
    if (arr->kind == Kind::Store) {
      std::size_t k = idx.size();
      bool all_eq = true, some_diff = false;
      for (std::size_t d = 0; d < k; ++d) {
        const Term& si = arr->kids[1 + d];
        if (!poly_equal(idx[d], si)) all_eq = false;
        if (poly_differ(idx[d], si, ctx)) some_diff = true;
      }
      if (all_eq) return arr->kids.back();
      if (some_diff) {
        arr = arr->kids[0];
        continue;
      }
      std::vector<Term> conds;
      for (std::size_t d = 0; d < k; ++d) conds.push_back(eq(idx[d], arr->kids[1 + d]));
      Term c = simp(and_t(conds), ctx);
      Term rest = simp_select(arr->kids[0], idx, ctx);
      Term v = arr->kids.back();
      if (same(v, rest)) return v;
      return ite(c, v, rest);
    }
    if (arr->kind == Kind::Lambda) {
      std::map<std::string, Term> m;
      for (std::size_t d = 0; d < idx.size(); ++d) m[arr->params[d]] = idx[d];
      return simp(subst(arr->kids[0], m), ctx);
    }
    if (arr->kind == Kind::Ite) {
      Term a = simp_select(arr->kids[1], idx, ctx);
      Term b = simp_select(arr->kids[2], idx, ctx);
      if (same(a, b)) return a;
      return ite(arr->kids[0], a, b);
    }
    return select(arr, idx);
  }
  throw TermError("select chain too long");
}

Term simp_quant(const Term& t, const Context& ctx) {
  bool fa = t->kind == Kind::Forall;
  Term lo = simp(t->kids[0], ctx);
  Term hi = simp(t->kids[1], ctx);
  Poly width = to_poly(hi) - to_poly(lo);
  std::int64_t w;
  if (width.is_const(&w)) {
    if (w <= 0) return blit(fa);
    if (w == 1) return simp(subst1(t->kids[2], t->name, lo), ctx);
  }
  if (ctx.prove_nonneg(width.scale(-1))) return blit(fa);
  Context inner = ctx.with(t->name, lo, simplify(sub(hi, cst(1))));
  Term body = simp(t->kids[2], inner);
  if (!occurs(t->name, body)) {
    Term nonempty = simp(lt(lo, hi), ctx);
    return simp(fa ? implies(nonempty, body) : and_t(nonempty, body), ctx);
  }
  if (!fa && body->kind == Kind::And) {
    // one-point rule: exists v in R :: (v == e && rest)
    for (auto& k : body->kids) {
      if (k->kind != Kind::Cmp || k->rel != Rel::Eq) continue;
      Poly d = to_poly(k->kids[0]) - to_poly(k->kids[1]);
      Poly coef, rest;
      if (!d.linear_in(var(t->name), &coef, &rest)) continue;
      std::int64_t c;
      if (!coef.is_const(&c) || (c != 1 && c != -1)) continue;
      Term val = rest.scale(-c).to_term();
      if (occurs(t->name, val)) continue;
      return simp(and_t(in_range(val, lo, hi), subst1(body, t->name, val)), ctx);
    }
  }
  if (is_true(body) && fa) return tru();
  if (is_false(body) && !fa) return fls();
  return fa ? forall_t(t->name, lo, hi, body) : exists_t(t->name, lo, hi, body);
}

Term simp_bool_list(const Term& t, const Context& ctx) {
  bool is_and = t->kind == Kind::And;
  std::vector<Term> out;
  for (auto& k : t->kids) {
    Term s = simp(k, ctx);
    std::vector<Term> parts;
    if (s->kind == t->kind)
      parts = s->kids;
    else
      parts.push_back(s);
    for (auto& p : parts) {
      if (is_and ? is_true(p) : is_false(p)) continue;
      if (is_and ? is_false(p) : is_true(p)) return blit(!is_and);
      bool dup = false;
      for (auto& o : out) {
        if (same(o, p)) dup = true;
        if ((p->kind == Kind::Not && same(p->kids[0], o)) ||
            (o->kind == Kind::Not && same(o->kids[0], p)))
          return blit(!is_and);
      }
      if (!dup) out.push_back(p);
    }
  }
  return is_and ? and_t(out) : or_t(out);
}

Term simp(const Term& t, const Context& ctx) {
  switch (t->kind) {
    case Kind::Const:
    case Kind::BoolConst:
    case Kind::Var:
      return t;
    case Kind::Add:
    case Kind::Mul: {
      std::vector<Term> kids;
      for (auto& k : t->kids) kids.push_back(simp(k, ctx));
      Term rebuilt = t->kind == Kind::Add ? add(kids) : mul(kids);
      return arith_from_poly(to_poly(rebuilt), ctx);
    }
    case Kind::Div:
    case Kind::Mod: {
      Term a = simp(t->kids[0], ctx);
      Term b = simp(t->kids[1], ctx);
      std::int64_t bv;
      if (!is_const(b, &bv) || bv == 0) return t->kind == Kind::Div ? div_t(a, b) : mod_t(a, b);
      Poly pa = to_poly(a);
      Poly q, r;
      for (auto& [m, k] : pa.terms) {
        std::int64_t qk = euclid_div(k, bv), rk = euclid_mod(k, bv);
        if (qk) q.terms.emplace(m, qk);
        if (rk) r.terms.emplace(m, rk);
      }
      std::int64_t rc;
      if (t->kind == Kind::Mod) {
        if (r.is_const(&rc)) return cst(euclid_mod(rc, bv));
        return mod_t(r.to_term(), b);
      }
      if (r.is_const(&rc)) return (q + Poly::constant(euclid_div(rc, bv))).to_term();
      return arith_from_poly(q + Poly::atom(div_t(r.to_term(), b)), ctx);
    }
    case Kind::Select: {
      Term arr = simp(t->kids[0], ctx);
      std::vector<Term> idx;
      for (std::size_t i = 1; i < t->kids.size(); ++i) idx.push_back(simp(t->kids[i], ctx));
      return simp_select(arr, idx, ctx);
    }
    case Kind::Store: {
      std::vector<Term> kids;
      for (auto& k : t->kids) kids.push_back(simp(k, ctx));
      Term base = kids[0];
      std::vector<Term> idx(kids.begin() + 1, kids.end() - 1);
      if (base->kind == Kind::Store) {
        bool all_eq = true;
        for (std::size_t d = 0; d < idx.size(); ++d)
          all_eq = all_eq && poly_equal(idx[d], base->kids[1 + d]);
        if (all_eq) base = base->kids[0];
      }
      return store(base, idx, kids.back());
    }
    case Kind::Lambda: return lambda(t->params, simp(t->kids[0], ctx));
    case Kind::Ite: {
      Term c = simp(t->kids[0], ctx);
      if (is_true(c)) return simp(t->kids[1], ctx);
      if (is_false(c)) return simp(t->kids[2], ctx);
      Term a = simp(t->kids[1], ctx);
      Term b = simp(t->kids[2], ctx);
      if (same(a, b)) return a;
      if (a->sort == Sort::Bool) {
        return simp(or_t(and_t(c, a), and_t(not_t(c), b)), ctx);
      }
      return ite(c, a, b);
    }
    case Kind::Cmp: {
      Term a = simp(t->kids[0], ctx);
      Term b = simp(t->kids[1], ctx);
      if (a->kind == Kind::Ite || b->kind == Kind::Ite) {
        const Term& it = a->kind == Kind::Ite ? a : b;
        bool left = a->kind == Kind::Ite;
        Term x = left ? cmp(t->rel, it->kids[1], b) : cmp(t->rel, a, it->kids[1]);
        Term y = left ? cmp(t->rel, it->kids[2], b) : cmp(t->rel, a, it->kids[2]);
        Term c = it->kids[0];
        Term sx = simp(x, ctx), sy = simp(y, ctx);
        if (same(sx, sy)) return sx;
        if (is_true(sx) && is_false(sy)) return c;
        if (is_false(sx) && is_true(sy)) return simp(not_t(c), ctx);
        return simp(or_t(and_t(c, sx), and_t(not_t(c), sy)), ctx);
      }
      Poly d = to_poly(a) - to_poly(b);
      switch (t->rel) {
        case Rel::Le: return canon_cmp(d, Rel::Le, ctx);
        case Rel::Lt: return canon_cmp(d + Poly::constant(1), Rel::Le, ctx);
        case Rel::Ge: return canon_cmp(d.scale(-1), Rel::Le, ctx);
        case Rel::Gt: return canon_cmp(d.scale(-1) + Poly::constant(1), Rel::Le, ctx);
        case Rel::Eq: return canon_cmp(d, Rel::Eq, ctx);
        case Rel::Ne: {
          Term e = canon_cmp(d, Rel::Eq, ctx);
          return not_t(e);
        }
      }
      return t;
    }
    case Kind::Not: {
      Term a = simp(t->kids[0], ctx);
      if (a->kind == Kind::Cmp && a->rel == Rel::Le) return simp(gt(a->kids[0], a->kids[1]), ctx);
      if (a->kind == Kind::And || a->kind == Kind::Or) {
        std::vector<Term> ks;
        for (auto& k : a->kids) ks.push_back(not_t(k));
        return simp(a->kind == Kind::And ? or_t(ks) : and_t(ks), ctx);
      }
      return not_t(a);
    }
    case Kind::And:
    case Kind::Or:
      return simp_bool_list(t, ctx);
    case Kind::Implies: {
      Term a = simp(t->kids[0], ctx);
      Term b = simp(t->kids[1], ctx);
      if (same(a, b)) return tru();
      if (is_false(b)) return simp(not_t(a), ctx);
      return implies(a, b);
    }
    case Kind::Forall:
    case Kind::Exists:
      return simp_quant(t, ctx);
  }
  return t;
}

}  // namespace

Term simplify(const Term& t, const Context& ctx) { return simp(t, ctx); }

Term simplify(const Term& t) {
  static const Context base;
  return simp(t, base);
}

Term subst_n(const Term& t, const Term& by) { return simplify(subst1(t, "N", by)); }

}  // namespace diffy
