#include "diffy/transform.hpp"

#include <numeric>

namespace diffy {

namespace {

Term n_minus_1() { return sub(param_n(), cst(1)); }

Term at_prev_n(const Term& t) { return subst_n(t, n_minus_1()); }

// ---------------------------------------------------------------------------
// Access footprints for the commutation check

struct Access {
  enum class Mode { Read, Write, Add };
  std::string var;
  std::vector<Term> idx;  // empty for scalars
  Mode mode;
  std::vector<Context::Range> ranges;
};

bool is_additive_scalar(const std::string& x, const Term& rhs, Term* rest) {
  Poly p = to_poly(rhs) - Poly::atom(var(x));
  Term r = p.to_term();
  if (occurs(x, r)) return false;
  *rest = r;
  return true;
}

bool is_additive_cell(const Term& cell, const Term& rhs, Term* rest) {
  Poly p = to_poly(rhs) - Poly::atom(cell);
  Term r = p.to_term();
  if (occurs(cell->kids[0]->name, r)) return false;
  *rest = r;
  return true;
}

void term_reads(const Term& t, const std::set<std::string>& skip,
                const std::vector<Context::Range>& ranges, std::vector<Access>& out) {
  if (t->kind == Kind::Var) {
    if (t->sort == Sort::Int && t->name != "N" && !skip.count(t->name))
      out.push_back({t->name, {}, Access::Mode::Read, ranges});
    return;
  }
  if (t->kind == Kind::Select && t->kids[0]->kind == Kind::Var) {
    std::vector<Term> idx(t->kids.begin() + 1, t->kids.end());
    out.push_back({t->kids[0]->name, idx, Access::Mode::Read, ranges});
    for (auto& i : idx) term_reads(i, skip, ranges, out);
    return;
  }
  for (auto& k : t->kids) term_reads(k, skip, ranges, out);
}

void collect_accesses(const StmtP& s, std::set<std::string>& counters,
                      std::vector<Context::Range> ranges, std::vector<Access>& out) {
  switch (s->kind) {
    case SKind::Seq:
      for (auto& x : s->body) collect_accesses(x, counters, ranges, out);
      return;
    case SKind::Assign: {
      Term rest;
      if (is_additive_scalar(s->name, s->rhs, &rest)) {
        out.push_back({s->name, {}, Access::Mode::Add, ranges});
        term_reads(rest, counters, ranges, out);
      } else {
        out.push_back({s->name, {}, Access::Mode::Write, ranges});
        term_reads(s->rhs, counters, ranges, out);
      }
      return;
    }
    case SKind::Store: {
      Term cell = select(avar(s->name, static_cast<int>(s->idx.size())), s->idx);
      Term rest;
      for (auto& i : s->idx) term_reads(i, counters, ranges, out);
      if (is_additive_cell(cell, s->rhs, &rest)) {
        out.push_back({s->name, s->idx, Access::Mode::Add, ranges});
        term_reads(rest, counters, ranges, out);
      } else {
        out.push_back({s->name, s->idx, Access::Mode::Write, ranges});
        term_reads(s->rhs, counters, ranges, out);
      }
      return;
    }
    case SKind::ArrayDef:
      // whole-array definition: conflicts with any access to the array
      out.push_back({s->name, {}, Access::Mode::Write, ranges});
      term_reads(s->rhs, counters, ranges, out);
      return;
    case SKind::If:
      term_reads(s->rhs, counters, ranges, out);
      collect_accesses(s->body[0], counters, ranges, out);
      collect_accesses(s->body[1], counters, ranges, out);
      return;
    case SKind::For: {
      term_reads(s->rhs, counters, ranges, out);
      ranges.push_back({s->name, cst(0), simplify(sub(s->rhs, cst(1)))});
      bool fresh = counters.insert(s->name).second;
      collect_accesses(s->body[0], counters, ranges, out);
      if (fresh) counters.erase(s->name);
      return;
    }
  }
}

bool conflicts(const Access& a, const Access& b) {
  if (a.var != b.var) return false;
  if (a.mode == Access::Mode::Read && b.mode == Access::Mode::Read) return false;
  if (a.mode == Access::Mode::Add && b.mode == Access::Mode::Add) return false;
  if (a.idx.empty() || b.idx.empty() || a.idx.size() != b.idx.size()) return true;
  Context ctx(1);
  ctx.ranges = a.ranges;
  for (auto& r : b.ranges) ctx.ranges.push_back(r);
  for (std::size_t d = 0; d < a.idx.size(); ++d)
    if (ctx.prove_ne(a.idx[d], b.idx[d])) return false;
  return true;
}

// Rename every counter bound inside s (and the given extra names) by adding
// a prime, so two copies of the same code can share one context.
std::map<std::string, Term> primed(const std::set<std::string>& names) {
  std::map<std::string, Term> m;
  for (auto& n : names) m[n] = var(n + "'");
  return m;
}

void bound_counters(const StmtP& s, std::set<std::string>& out) {
  if (s->kind == SKind::For) out.insert(s->name);
  for (auto& b : s->body) bound_counters(b, out);
}

StmtP rename_binders(const StmtP& s, const std::map<std::string, Term>& m) {
  auto ex = [&](const Term& t) { return subst(t, m); };
  switch (s->kind) {
    case SKind::Seq: {
      std::vector<StmtP> xs;
      for (auto& x : s->body) xs.push_back(rename_binders(x, m));
      return seq(xs);
    }
    case SKind::Assign: return assign(s->name, ex(s->rhs));
    case SKind::Store: {
      std::vector<Term> idx;
      for (auto& i : s->idx) idx.push_back(ex(i));
      return store_stmt(s->name, idx, ex(s->rhs));
    }
    case SKind::ArrayDef: return array_def(s->name, ex(s->rhs));
    case SKind::If: return if_stmt(ex(s->rhs), rename_binders(s->body[0], m), rename_binders(s->body[1], m));
    case SKind::For: {
      auto it = m.find(s->name);
      std::string c = it == m.end() ? s->name : it->second->name;
      return for_stmt(c, ex(s->rhs), rename_binders(s->body[0], m));
    }
  }
  return s;
}

// The missed part at counter value l must commute with the truncated body
// at every l' >= l.
void check_commutes(const std::string& l, const Term& ub_prev, const StmtP& missed,
                    const StmtP& q_body, const std::vector<Context::Range>& outer) {
  std::vector<Access> ma, qa;
  std::set<std::string> counters;
  for (auto& r : outer) counters.insert(r.v);
  counters.insert(l);
  auto ranges = outer;
  ranges.push_back({l, cst(0), simplify(sub(ub_prev, cst(1)))});
  collect_accesses(missed, counters, ranges, ma);

  std::set<std::string> inner;
  bound_counters(q_body, inner);
  inner.insert(l);
  auto m = primed(inner);
  StmtP qb = rename_binders(q_body, m);
  std::set<std::string> qcounters = counters;
  for (auto& [k, v] : m) qcounters.insert(v->name);
  std::vector<Context::Range> qranges{{l + "'", var(l), simplify(sub(ub_prev, cst(1)))}};
  collect_accesses(qb, qcounters, qranges, qa);
  for (auto& a : ma)
    for (auto& b : qa)
      if (conflicts(a, b))
        throw TransformError(TransformError::Kind::UnsupportedReordering,
                             "peeled iterations of loop " + l + " do not commute with later iterations (" +
                                 a.var + ")");
}

// ---------------------------------------------------------------------------
// Faulhaber sums over c = 0..U-1 of a polynomial in c.

std::optional<Term> power_sum(const Poly& e, const Term& c, const Term& u) {
  auto coeffs = e.coefficients_in(c);
  if (coeffs.size() > 4) return std::nullopt;
  for (auto& k : coeffs)
    for (auto& a : k.atoms())
      if (occurs(c->name, a)) return std::nullopt;
  Poly U = to_poly(u), one = Poly::constant(1);
  // 12 * sum_{c<U} c^k
  std::vector<Poly> s12{U.scale(12), (U * (U - one)).scale(6),
                        ((U - one) * U * (U.scale(2) - one)).scale(2),
                        (U * U * (U - one) * (U - one)).scale(3)};
  Poly num;
  for (std::size_t k = 0; k < coeffs.size(); ++k) num = num + coeffs[k] * s12[k];
  std::int64_t g = std::gcd(num.content(), std::int64_t{12});
  if (g == 0) return cst(0);
  Poly q;
  for (auto& [mono, coef] : num.terms) q.terms[mono] = coef / g;
  Term t = q.to_term();
  std::int64_t den = 12 / g;
  return den == 1 ? t : div_t(t, cst(den));
}

}  // namespace

StmtP simplify_stmt(const StmtP& s, const Context& ctx) {
  auto ex = [&](const Term& t) { return simplify(t, ctx); };
  switch (s->kind) {
    case SKind::Seq: {
      std::vector<StmtP> xs;
      for (auto& x : s->body) xs.push_back(simplify_stmt(x, ctx));
      return seq(xs);
    }
    case SKind::Assign: return assign(s->name, ex(s->rhs));
    case SKind::Store: {
      std::vector<Term> idx;
      for (auto& i : s->idx) idx.push_back(ex(i));
      return store_stmt(s->name, idx, ex(s->rhs));
    }
    case SKind::ArrayDef: return array_def(s->name, ex(s->rhs));
    case SKind::If: {
      Term c = ex(s->rhs);
      if (is_true(c)) return simplify_stmt(s->body[0], ctx);
      if (is_false(c)) return simplify_stmt(s->body[1], ctx);
      return if_stmt(c, simplify_stmt(s->body[0], ctx), simplify_stmt(s->body[1], ctx));
    }
    case SKind::For: {
      Term ub = ex(s->rhs);
      return for_stmt(s->name, ub, simplify_stmt(s->body[0], ctx.with_counter(s->name, ub)));
    }
  }
  return s;
}

StmtP truncate_bounds(const StmtP& s) {
  switch (s->kind) {
    case SKind::Seq: {
      std::vector<StmtP> xs;
      for (auto& x : s->body) xs.push_back(truncate_bounds(x));
      return seq(xs);
    }
    case SKind::If: return if_stmt(s->rhs, truncate_bounds(s->body[0]), truncate_bounds(s->body[1]));
    case SKind::For: return for_stmt(s->name, at_prev_n(s->rhs), truncate_bounds(s->body[0]));
    default: return s;
  }
}

std::string PeelBuilder::fresh_counter(const std::string& base) {
  std::string b = base.substr(0, base.find('$'));
  std::string n = b + "$p" + std::to_string(++next_);
  new_counters.insert(n);
  return n;
}

StmtP PeelBuilder::rename_counters(const StmtP& s) {
  std::set<std::string> inner;
  bound_counters(s, inner);
  std::map<std::string, Term> m;
  for (auto& c : inner) m[c] = var(fresh_counter(c));
  return rename_binders(s, m);
}

StmtP PeelBuilder::lpeel(const Stmt& loop, const Term& lo, const Term& hi) {
  Term d = simplify(sub(hi, lo));
  std::int64_t k;
  const StmtP& body = loop.body[0];
  if (is_const(d, &k)) {
    if (k < 0)
      throw TransformError(TransformError::Kind::NegativePeel,
                           "loop " + loop.name + " has a decreasing bound");
    std::vector<StmtP> copies;
    for (std::int64_t t = 0; t < k; ++t) {
      Term val = simplify(add(lo, cst(t)));
      copies.push_back(rename_counters(simplify_stmt(subst_stmt(body, {{loop.name, val}}), Context(1))));
    }
    return seq(copies);
  }
  std::string c = fresh_counter(loop.name);
  StmtP b = subst_stmt(body, {{loop.name, add(lo, var(c))}});
  b = simplify_stmt(b, Context(1));
  return for_stmt(c, d, rename_counters(b));
}

StmtP PeelBuilder::miss(const StmtP& s, const std::vector<Context::Range>& outer) {
  switch (s->kind) {
    case SKind::Seq: {
      std::vector<StmtP> xs;
      for (auto& x : s->body) xs.push_back(miss(x, outer));
      return seq(xs);
    }
    case SKind::If: {
      StmtP a = miss(s->body[0], outer), b = miss(s->body[1], outer);
      if (is_empty(a) && is_empty(b)) return seq({});
      return if_stmt(s->rhs, a, b);
    }
    case SKind::For: {
      Term ub_prev = at_prev_n(s->rhs);
      auto inner = outer;
      inner.push_back({s->name, cst(0), simplify(sub(ub_prev, cst(1)))});
      StmtP m = miss(s->body[0], inner);
      std::vector<StmtP> parts;
      if (!is_empty(m)) {
        check_commutes(s->name, ub_prev, m, truncate_bounds(s->body[0]), outer);
        parts.push_back(for_stmt(s->name, ub_prev, m));
      }
      parts.push_back(lpeel(*s, ub_prev, s->rhs));
      return seq(parts);
    }
    default: return seq({});
  }
}

std::pair<StmtP, StmtP> PeelBuilder::q_and_peel_for_loop(const StmtP& loop) {
  return {truncate_bounds(loop), miss(loop, {})};
}

namespace {

// Variables (scalars and arrays) read by a term, excluding counters.
std::set<std::string> reads_of(const Term& t) { return free_vars(t); }

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (auto& x : a)
    if (b.count(x)) return false;
  return true;
}

}  // namespace

std::optional<StmtP> PeelBuilder::summarize_peel_loop(const StmtP& loop, const Context& ctx) {
  if (loop->kind != SKind::For) return std::nullopt;
  const std::string& c = loop->name;
  Term u = loop->rhs;
  Term cv = var(c);
  if (!ctx.prove_le(cst(0), u)) return std::nullopt;
  auto body = items(loop->body[0]);
  std::set<std::string> written;
  for (auto& s : body) {
    if (s->kind != SKind::Assign && s->kind != SKind::Store) return std::nullopt;
    if (!written.insert(s->name).second) return std::nullopt;
  }
  Term last = simplify(sub(u, cst(1)));
  bool nonempty = ctx.prove_lt(cst(0), u);
  std::vector<StmtP> out;
  for (auto& s : body) {
    std::set<std::string> others = written;
    others.erase(s->name);
    if (s->kind == SKind::Assign) {
      Term rest;
      if (!disjoint(reads_of(s->rhs), others)) return std::nullopt;
      if (is_additive_scalar(s->name, s->rhs, &rest)) {
        auto sum = power_sum(to_poly(rest), cv, u);
        if (!sum) return std::nullopt;
        out.push_back(assign(s->name, simplify(add(var(s->name), *sum), ctx)));
        continue;
      }
      if (occurs(s->name, s->rhs)) return std::nullopt;
      Term v = subst1(s->rhs, c, last);
      out.push_back(assign(s->name, simplify(nonempty ? v : ite(gt(u, cst(0)), v, var(s->name)), ctx)));
      continue;
    }
    // array store
    Term arr = avar(s->name, static_cast<int>(s->idx.size()));
    for (auto& i : s->idx)
      if (!disjoint(reads_of(i), written)) return std::nullopt;
    if (!disjoint(reads_of(s->rhs), others)) return std::nullopt;
    bool idx_uses_c = false;
    for (auto& i : s->idx) idx_uses_c = idx_uses_c || occurs(c, i);
    Term cell = select(arr, s->idx);
    if (!idx_uses_c) {
      Term rest;
      if (is_additive_cell(cell, s->rhs, &rest)) {
        auto sum = power_sum(to_poly(rest), cv, u);
        if (!sum) return std::nullopt;
        out.push_back(store_stmt(s->name, s->idx, simplify(add(cell, *sum), ctx)));
        continue;
      }
      if (occurs(s->name, s->rhs) || !nonempty) return std::nullopt;
      out.push_back(store_stmt(s->name, s->idx, simplify(subst1(s->rhs, c, last), ctx)));
      continue;
    }
    // affine map: exactly one index position is c + b
    int pos = -1;
    Term offset;
    for (std::size_t d = 0; d < s->idx.size(); ++d) {
      if (!occurs(c, s->idx[d])) continue;
      if (pos >= 0) return std::nullopt;
      Poly coef, rest;
      if (!to_poly(s->idx[d]).linear_in(cv, &coef, &rest)) return std::nullopt;
      std::int64_t k;
      if (!coef.is_const(&k) || k != 1) return std::nullopt;
      Term off = rest.to_term();
      if (occurs(c, off)) return std::nullopt;
      pos = static_cast<int>(d);
      offset = off;
    }
    // the rhs may read the array only at the written cell
    const std::string marker = fresh_name("cell");
    Term g = replace_subterm(s->rhs, cell, var(marker));
    if (occurs(s->name, g)) return std::nullopt;
    std::vector<std::string> params;
    std::vector<Term> ps;
    for (std::size_t d = 0; d < s->idx.size(); ++d) {
      params.push_back(fresh_name("t"));
      ps.push_back(var(params.back()));
    }
    std::vector<Term> conds;
    Term tp = ps[static_cast<std::size_t>(pos)];
    conds.push_back(le(offset, tp));
    conds.push_back(lt(tp, add(offset, u)));
    for (std::size_t d = 0; d < s->idx.size(); ++d)
      if (static_cast<int>(d) != pos) conds.push_back(eq(ps[d], s->idx[d]));
    Term cval = sub(tp, offset);
    Term val = subst(g, {{c, cval}, {marker, select(arr, ps)}});
    Term lam = lambda(params, ite(and_t(conds), val, select(arr, ps)));
    out.push_back(array_def(s->name, simplify(lam, ctx)));
  }
  return seq(out);
}

StmtP PeelBuilder::summarize_all(const StmtP& s, const Context& ctx) {
  switch (s->kind) {
    case SKind::Seq: {
      std::vector<StmtP> xs;
      for (auto& x : s->body) xs.push_back(summarize_all(x, ctx));
      return seq(xs);
    }
    case SKind::If:
      return if_stmt(s->rhs, summarize_all(s->body[0], ctx), summarize_all(s->body[1], ctx));
    case SKind::For: {
      Context inner = ctx.with_counter(s->name, s->rhs);
      StmtP loop = for_stmt(s->name, s->rhs, summarize_all(s->body[0], inner));
      if (auto sum = summarize_peel_loop(loop, ctx)) return *sum;
      return loop;
    }
    default: return s;
  }
}

namespace {

using Effect = std::map<std::string, Term>;

Term apply_effect(const Term& t, const Effect& e) { return subst(t, e); }

void peel_effect(const StmtP& s, Effect& eff, std::set<std::string>& blocked, const Program& decls) {
  auto blocked_read = [&](const Term& t) { return !disjoint(free_vars(t), blocked); };
  auto current = [&](const std::string& v) {
    auto it = eff.find(v);
    return it != eff.end() ? it->second : var_term(decls, v);
  };
  switch (s->kind) {
    case SKind::Seq:
      for (auto& x : s->body) peel_effect(x, eff, blocked, decls);
      return;
    case SKind::Assign:
      if (blocked_read(s->rhs)) {
        blocked.insert(s->name);
        eff.erase(s->name);
        return;
      }
      eff[s->name] = simplify(apply_effect(s->rhs, eff));
      return;
    case SKind::Store: {
      bool b = blocked.count(s->name) > 0 || blocked_read(s->rhs);
      for (auto& i : s->idx) b = b || blocked_read(i);
      if (b) {
        blocked.insert(s->name);
        eff.erase(s->name);
        return;
      }
      std::vector<Term> idx;
      for (auto& i : s->idx) idx.push_back(simplify(apply_effect(i, eff)));
      eff[s->name] = simplify(store(current(s->name), idx, apply_effect(s->rhs, eff)));
      return;
    }
    case SKind::ArrayDef:
      if (blocked_read(s->rhs)) {
        blocked.insert(s->name);
        eff.erase(s->name);
        return;
      }
      eff[s->name] = simplify(apply_effect(s->rhs, eff));
      return;
    case SKind::If: {
      if (blocked_read(s->rhs)) {
        for (auto& v : written_vars(s)) {
          blocked.insert(v);
          eff.erase(v);
        }
        return;
      }
      Term c = simplify(apply_effect(s->rhs, eff));
      Effect other = eff;
      std::set<std::string> ob = blocked;
      peel_effect(s->body[0], eff, blocked, decls);
      peel_effect(s->body[1], other, ob, decls);
      for (auto& v : ob) blocked.insert(v);
      std::set<std::string> names;
      for (auto& [k, v] : eff) names.insert(k);
      for (auto& [k, v] : other) names.insert(k);
      Effect merged;
      for (auto& k : names) {
        if (blocked.count(k)) continue;
        Term a = eff.count(k) ? eff[k] : var_term(decls, k);
        Term b = other.count(k) ? other[k] : var_term(decls, k);
        merged[k] = same(a, b) ? a : simplify(ite(c, a, b));
      }
      eff = merged;
      return;
    }
    case SKind::For:
      for (auto& v : written_vars(s)) {
        blocked.insert(v);
        eff.erase(v);
      }
      return;
  }
}

}  // namespace

QAndPeel gen_q_and_peel(const SsaProgram& sp) {
  QAndPeel r;
  PeelBuilder pb;
  const Program& p = sp.program;
  std::vector<StmtP> q_items, raw_items, peel_items;
  std::size_t loop_no = 0;
  for (auto& s : items(p.body)) {
    // rewrite uses of values the earlier peels define
    std::set<std::string> uses = read_vars(s);
    for (auto& v : uses)
      if (r.blocked.count(v))
        throw TransformError(TransformError::Kind::PeelSubstitutionBlocked,
                             "value of " + v + " after a peel loop is not expressible");
    Effect used;
    for (auto& v : uses)
      if (auto it = r.effect.find(v); it != r.effect.end() && !is_var(it->second, v)) used[v] = it->second;
    StmtP rewritten = s->kind == SKind::For ? truncate_bounds(s) : s;
    if (!used.empty()) {
      rewritten = subst_stmt(rewritten, used);
      for (auto& [v, val] : used) r.substitutions.push_back({v, val, loop_no});
    }
    rewritten = simplify_stmt(rewritten, Context(1));
    if (s->kind != SKind::For) {
      q_items.push_back(rewritten);
      continue;
    }
    auto [ql, rl] = pb.q_and_peel_for_loop(s);
    r.per_loop.push_back({ql, rl});
    q_items.push_back(rewritten);
    raw_items.push_back(rl);
    StmtP summarized = pb.summarize_all(rl);
    peel_items.push_back(summarized);
    peel_effect(summarized, r.effect, r.blocked, p);
    ++loop_no;
  }
  r.q = p;
  r.q.body = seq(q_items);
  r.peel = p;
  r.peel.body = seq(peel_items);
  for (auto& c : pb.new_counters) {
    r.peel.counters.insert(c);
    r.peel.scalars.insert(c);
  }
  r.raw_peel = seq(raw_items);
  return r;
}

}  // namespace diffy
