#include "diffy/logic.hpp"

#include <algorithm>

namespace diffy {

FormulaDiff formula_diff(const Term& phi) {
  std::vector<Term> keep, delta;
  Term n1 = sub(param_n(), cst(1));
  for (auto& c : conjuncts(phi)) {
    if (c->kind == Kind::Forall && is_var(c->kids[1], "N") && !occurs("N", c->kids[0])) {
      keep.push_back(forall_t(c->name, c->kids[0], n1, c->kids[2]));
      delta.push_back(implies(lt(c->kids[0], param_n()), subst1(c->kids[2], c->name, n1)));
      continue;
    }
    keep.push_back(c);
  }
  Context ctx(1);
  return {simplify(and_t(keep), ctx), simplify(and_t(delta), ctx)};
}

namespace {

// Store indices (per dimension) reachable from an array term.
void store_indices(const Term& arr, std::vector<std::vector<Term>>& out) {
  if (arr->kind == Kind::Store) {
    out.emplace_back(arr->kids.begin() + 1, arr->kids.end() - 1);
    store_indices(arr->kids[0], out);
  } else if (arr->kind == Kind::Ite) {
    store_indices(arr->kids[1], out);
    store_indices(arr->kids[2], out);
  }
}

bool poly_same(const Term& a, const Term& b) { return (to_poly(a) - to_poly(b)).is_zero(); }

// Does body read a store at position hi-1 (top) or lo (bottom) along v?
void boundary_hits(const Term& t, const std::string& v, const Term& lo, const Term& hi, bool* top,
                   bool* bottom) {
  if (t->kind == Kind::Select) {
    std::vector<std::vector<Term>> sts;
    store_indices(t->kids[0], sts);
    for (std::size_t d = 1; d < t->kids.size(); ++d) {
      if (!is_var(t->kids[d], v)) continue;
      for (auto& s : sts) {
        const Term& si = s[d - 1];
        if (occurs(v, si)) continue;
        if (poly_same(si, sub(hi, cst(1)))) *top = true;
        if (poly_same(si, lo)) *bottom = true;
      }
    }
  }
  if ((is_quant(t) && t->name == v) ||
      (t->kind == Kind::Lambda && std::find(t->params.begin(), t->params.end(), v) != t->params.end()))
    return;
  for (auto& k : t->kids) boundary_hits(k, v, lo, hi, top, bottom);
}

Term split_rec(const Term& f, int& budget) {
  if (f->kids.empty()) return f;
  if (f->sort != Sort::Bool) return f;
  if (is_quant(f)) {
    Term body = split_rec(f->kids[2], budget);
    Term lo = f->kids[0], hi = f->kids[1];
    bool fa = f->kind == Kind::Forall;
    bool top = false, bottom = false;
    boundary_hits(body, f->name, lo, hi, &top, &bottom);
    auto rebuild = [&](const Term& l, const Term& h) {
      return fa ? forall_t(f->name, l, h, body) : exists_t(f->name, l, h, body);
    };
    if ((top || bottom) && budget > 0) {
      --budget;
      Term nonempty = lt(lo, hi);
      Term rest, point;
      if (top) {
        rest = rebuild(lo, sub(hi, cst(1)));
        point = subst1(body, f->name, simplify(sub(hi, cst(1))));
      } else {
        rest = rebuild(add(lo, cst(1)), hi);
        point = subst1(body, f->name, lo);
      }
      Term inst = fa ? implies(nonempty, point) : and_t(nonempty, point);
      Term r = fa ? and_t(split_rec(rest, budget), inst) : or_t(split_rec(rest, budget), inst);
      return r;
    }
    return rebuild(lo, hi);
  }
  switch (f->kind) {
    case Kind::And:
    case Kind::Or:
    case Kind::Not:
    case Kind::Implies: {
      std::vector<Term> ks;
      for (auto& k : f->kids) ks.push_back(split_rec(k, budget));
      return with_kids(f, ks);
    }
    default: return f;
  }
}

std::size_t count_ites(const Term& t) {
  std::size_t c = t->kind == Kind::Ite ? 1 : 0;
  for (auto& k : t->kids) c += count_ites(k);
  return c;
}

Term wp_rec(const Term& post, const StmtP& s, const Context& ctx, int& budget) {
  switch (s->kind) {
    case SKind::Seq: {
      Term w = post;
      for (auto it = s->body.rbegin(); it != s->body.rend(); ++it) w = wp_rec(w, *it, ctx, budget);
      return w;
    }
    case SKind::Assign: return simplify(subst1(post, s->name, s->rhs), ctx);
    case SKind::Store:
    case SKind::ArrayDef: {
      Term val = s->kind == SKind::Store
                     ? store(avar(s->name, static_cast<int>(s->idx.size())), s->idx, s->rhs)
                     : s->rhs;
      Term w = subst1(post, s->name, val);
      w = split_rec(w, budget);
      return simplify(w, ctx);
    }
    case SKind::If: {
      Term a = wp_rec(post, s->body[0], ctx, budget);
      Term b = wp_rec(post, s->body[1], ctx, budget);
      if (same(a, b)) return a;
      return simplify(and_t(implies(s->rhs, a), implies(not_t(s->rhs), b)), ctx);
    }
    case SKind::For: throw LogicError(LogicError::Kind::LoopInCode, "wp of code containing a loop");
  }
  return post;
}

}  // namespace

Term split_boundary(const Term& f, int bound) {
  int budget = bound;
  return split_rec(f, budget);
}

std::optional<Term> wp(const Term& post, const StmtP& code, const Context& ctx, int bound) {
  int budget = bound;
  Term w = wp_rec(post, code, ctx, budget);
  if (count_ites(w) > static_cast<std::size_t>(bound)) return std::nullopt;
  return w;
}

namespace {

Term qe_walk(const Term& t, const Context& ctx, const std::map<std::string, Elim>& d) {
  switch (t->kind) {
    case Kind::Var: {
      auto it = d.find(t->name);
      if (it != d.end() && t->sort == Sort::Int) return it->second.value;
      return t;
    }
    case Kind::Const:
    case Kind::BoolConst: return t;
    case Kind::Forall:
    case Kind::Exists: {
      Term lo = qe_walk(t->kids[0], ctx, d), hi = qe_walk(t->kids[1], ctx, d);
      std::map<std::string, Elim> inner = d;
      inner.erase(t->name);
      Context c = ctx.with(t->name, lo, simplify(sub(hi, cst(1))));
      return with_kids(t, {lo, hi, qe_walk(t->kids[2], c, inner)});
    }
    case Kind::Lambda: {
      std::map<std::string, Elim> inner = d;
      for (auto& p : t->params) inner.erase(p);
      return with_kids(t, {qe_walk(t->kids[0], ctx, inner)});
    }
    case Kind::Select: {
      std::vector<Term> idx;
      for (std::size_t k = 1; k < t->kids.size(); ++k) idx.push_back(qe_walk(t->kids[k], ctx, d));
      const Term& arr = t->kids[0];
      if (arr->kind == Kind::Var) {
        auto it = d.find(arr->name);
        if (it != d.end()) {
          const Elim& e = it->second;
          bool inside = true;
          for (std::size_t k = 0; k < idx.size() && inside; ++k)
            inside = ctx.prove_le(e.lo[k], idx[k]) && ctx.prove_lt(idx[k], e.hi[k]);
          if (inside) return simplify(select(e.value, idx), ctx);
          return select(arr, idx);
        }
      }
      return select(qe_walk(arr, ctx, d), idx);
    }
    default: {
      std::vector<Term> ks;
      for (auto& k : t->kids) ks.push_back(qe_walk(k, ctx, d));
      return with_kids(t, ks);
    }
  }
}

}  // namespace

std::optional<Term> qe_by_substitution(const std::set<std::string>& vars, const Term& f,
                                       const std::map<std::string, Elim>& d, const Context& ctx) {
  if (vars.empty()) return f;
  std::map<std::string, Elim> use;
  for (auto& [k, e] : d)
    if (vars.count(k)) use[k] = e;
  Term r = simplify(qe_walk(f, ctx, use), ctx);
  for (auto& v : free_vars(r))
    if (vars.count(v)) return std::nullopt;
  return r;
}

namespace {

void int_symbols(const Term& t, std::set<std::string>& bound, std::set<std::string>& out) {
  if (t->kind == Kind::Var) {
    if (t->sort == Sort::Int && !bound.count(t->name)) out.insert(t->name);
    return;
  }
  if (is_quant(t)) {
    int_symbols(t->kids[0], bound, out);
    int_symbols(t->kids[1], bound, out);
    bool fresh = bound.insert(t->name).second;
    int_symbols(t->kids[2], bound, out);
    if (fresh) bound.erase(t->name);
    return;
  }
  if (t->kind == Kind::Lambda) {
    std::set<std::string> b = bound;
    for (auto& p : t->params) b.insert(p);
    int_symbols(t->kids[0], b, out);
    return;
  }
  for (auto& k : t->kids) int_symbols(k, bound, out);
}

}  // namespace

SolverVerdict check_hoare_loopfree(const Term& pre, const StmtP& code, const Term& post,
                                   const SolverConfig& cfg, std::int64_t nmin) {
  Context ctx(nmin);
  auto w = wp(post, code, ctx);
  if (!w) {
    SolverVerdict v;
    v.reason = "weakest precondition exceeds the conditional split bound";
    return v;
  }
  Term hyp = and_t(ge(param_n(), cst(nmin)), pre);
  std::set<std::string> syms, bound;
  int_symbols(hyp, bound, syms);
  int_symbols(*w, bound, syms);
  syms.insert("N");
  std::vector<std::string> mv(syms.begin(), syms.end());
  SolverVerdict v = check_valid(hyp, *w, cfg, mv);
  if (v.status != Validity::Invalid) return v;
  // smallest N with a counterexample
  for (std::int64_t n = std::max<std::int64_t>(nmin, 1); n <= 8; ++n) {
    if (v.model.count("N") && v.model["N"] <= n) break;
    SolverVerdict p = check_valid(and_t(hyp, eq(param_n(), cst(n))), *w, cfg, mv);
    if (p.status == Validity::Invalid) return p;
  }
  return v;
}

}  // namespace diffy
