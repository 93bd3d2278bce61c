#include "diffy/engine.hpp"

#include <algorithm>
#include <chrono>

#include "diffy/logic.hpp"
#include "diffy/simplify.hpp"
#include "diffy/ssa.hpp"
#include "diffy/transform.hpp"

namespace diffy {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "Verified";
    case Verdict::Falsified: return "Falsified";
    case Verdict::Unknown: return "Unknown";
  }
  return "Unknown";
}

namespace {

Term nm1() { return sub(param_n(), cst(1)); }

std::vector<std::string> state_names(const Program& p) {
  std::vector<std::string> out;
  for (auto& v : p.scalars)
    if (!p.counters.count(v)) out.push_back(v);
  for (auto& [a, d] : p.arrays) out.push_back(a);
  return out;
}

int arity_of(const Program& p, const std::string& v) {
  auto it = p.arrays.find(v);
  return it == p.arrays.end() ? 0 : it->second;
}

std::vector<Term> ix_terms(int dims) {
  std::vector<Term> out;
  for (int k = 0; k < dims; ++k) out.push_back(var(index_param(k)));
  return out;
}

std::vector<std::string> ix_names(int dims) {
  std::vector<std::string> out;
  for (int k = 0; k < dims; ++k) out.push_back(index_param(k));
  return out;
}

Term p_sym(const Program& decls, const std::string& v) {
  int d = arity_of(decls, v);
  return d ? avar("p#" + v, d) : var("p#" + v);
}

// Elimination entries for every variable with a known difference.
// sign = -1: P value from Q value (p#v := v - delta);
// sign = +1: Q value from P value (v := p#v + delta).
std::map<std::string, Elim> elims(const Program& decls, const DiffInvariant& d, int sign) {
  std::map<std::string, Elim> out;
  for (auto& [v, delta] : d.exit) {
    if (delta.top) continue;
    int dims = arity_of(decls, v);
    Term base = sign < 0 ? var_term(decls, v) : p_sym(decls, v);
    std::string key = sign < 0 ? "p#" + v : v;
    Elim e;
    if (dims == 0) {
      e.value = simplify(sign < 0 ? sub(base, delta.expr) : add(base, delta.expr));
    } else {
      auto ix = ix_terms(dims);
      Term cell = select(base, ix);
      e.value = lambda(ix_names(dims), sign < 0 ? sub(cell, delta.expr) : add(cell, delta.expr));
      for (int k = 0; k < dims; ++k) {
        e.lo.push_back(cst(0));
        e.hi.push_back(nm1());
      }
    }
    out[key] = e;
  }
  return out;
}

}  // namespace

Term shift_to_q(const Term& f, const Program& decls, const DiffInvariant& d) {
  Term prev = subst_n(f, nm1());
  std::map<std::string, Term> ren;
  std::set<std::string> pvars;
  std::set<std::string> fv = free_vars(prev);
  for (auto& v : state_names(decls))
    if (fv.count(v)) {
      ren[v] = p_sym(decls, v);
      pvars.insert("p#" + v);
    }
  prev = subst(prev, ren);
  auto el = elims(decls, d, -1);
  Context ctx(d.nmin);
  std::vector<Term> keep;
  for (auto& c : conjuncts(prev)) {
    std::set<std::string> mine;
    for (auto& v : free_vars(c))
      if (pvars.count(v)) mine.insert(v);
    if (auto r = qe_by_substitution(mine, c, el, ctx)) keep.push_back(*r);
  }
  return simplify(and_t(keep), ctx);
}

std::optional<Term> lift_to_p(const Term& chi_prime, const Program& decls, const DiffInvariant& d) {
  std::set<std::string> vars;
  std::set<std::string> fv = free_vars(chi_prime);
  for (auto& v : state_names(decls))
    if (fv.count(v)) vars.insert(v);
  auto el = elims(decls, d, +1);
  Context ctx(d.nmin);
  auto r = qe_by_substitution(vars, chi_prime, el, ctx);
  if (!r) return std::nullopt;
  Term shifted = subst_n(*r, add(param_n(), cst(1)));
  std::map<std::string, Term> back;
  for (auto& v : vars) back["p#" + v] = var_term(decls, v);
  return simplify(subst(shifted, back), Context(std::max<std::int64_t>(1, d.nmin - 1)));
}

namespace {

struct Clock2 {
  Clock::time_point deadline;
  bool expired() const { return Clock::now() > deadline; }
};

struct Timeout : std::runtime_error {
  Timeout() : std::runtime_error("time budget exhausted") {}
};

StmtP rename_stmt(const StmtP& s, const std::map<std::string, std::string>& m,
                  const std::map<std::string, Term>& tm) {
  auto nm = [&](const std::string& x) {
    auto it = m.find(x);
    return it == m.end() ? x : it->second;
  };
  switch (s->kind) {
    case SKind::Seq: {
      std::vector<StmtP> b;
      for (auto& x : s->body) b.push_back(rename_stmt(x, m, tm));
      return seq(b);
    }
    case SKind::Assign: return assign(nm(s->name), subst(s->rhs, tm));
    case SKind::Store: {
      std::vector<Term> idx;
      for (auto& i : s->idx) idx.push_back(subst(i, tm));
      return store_stmt(nm(s->name), idx, subst(s->rhs, tm));
    }
    case SKind::ArrayDef: return array_def(nm(s->name), subst(s->rhs, tm));
    case SKind::If:
      return if_stmt(subst(s->rhs, tm), rename_stmt(s->body[0], m, tm), rename_stmt(s->body[1], m, tm));
    case SKind::For: return for_stmt(nm(s->name), subst(s->rhs, tm), rename_stmt(s->body[0], m, tm));
  }
  return s;
}

std::string sanitize(const std::string& v) {
  std::string out;
  for (char c : v) {
    if (c == '$') out += "_v";
    else if (c == '#') out += "_h";
    else out += c;
  }
  return out;
}

class Engine {
 public:
  Engine(const EngineOptions& opt, Clock::time_point deadline) : opt_(opt), clock_{deadline} {
    cfg_ = opt.solver;
    cfg_.deadline = deadline;
  }

  void run(const Program& p, const Spec& spec, VerifyResult& r, int depth, int max_depth) {
    r.recursion_depth = std::max(r.recursion_depth, depth);
    if (!p.unsupported.empty()) {
      unknown(r, "unsupported construct: " + p.unsupported.front());
      return;
    }
    SsaProgram sp = ssa_rename(p, spec);
    if (depth == 0) r.ssa_source = to_source(sp.program, &sp.spec);
    std::int64_t m = opt_.base_width;
    if (!base_cases(p, spec, 1, m, r)) return;
    if (!has_loop(p.body)) {
      SolverVerdict v = check_hoare_loopfree(sp.spec.pre, sp.program.body, sp.spec.post, cfg_, 1);
      if (v.status == Validity::Valid) return verified(r);
      if (sweep(p, spec, m + 1, r)) return;
      return unknown(r, v.status == Validity::Invalid ? "counterexample not confirmed by execution"
                                                      : "solver could not decide: " + v.reason);
    }
    QAndPeel qp = gen_q_and_peel(sp);
    if (depth == 0) {
      r.q_source = to_source(qp.q.body);
      r.peel_source = to_source(qp.peel.body);
    }
    // precondition of N must imply the one of N-1 on the shifted inputs
    auto d0 = entry_deltas(sp.program, sp.spec.pre);
    std::int64_t m_max = m + opt_.max_base_bump;
    while (!pre_inherited(sp, d0, m + 1)) {
      if (m >= m_max) return unknown(r, "precondition is not preserved from N to N-1");
      ++m;
      if (!base_cases(p, spec, m, m, r)) return;
    }
    r.base_width = m;
    tick();
    DiffInvOptions dopt;
    dopt.nmin = m + 1;
    dopt.solver = cfg_;
    dopt.budget = opt_.unroll_budget;
    DiffInvariant dinv = infer_diff_invariants(sp, qp, sp.spec.pre, dopt);
    if (depth == 0) r.invariant = dinv;
    tick();

    Term psi_prime = shift_to_q(sp.spec.post, sp.program, dinv);
    FormulaDiff fd = formula_diff(sp.spec.pre);
    std::vector<Term> base_hyp{ge(param_n(), cst(m + 1)), fd.phi_prime, fd.delta_phi};
    for (auto& f : dinv.facts) base_hyp.push_back(f);
    if (depth == 0) r.psi_prime = psi_prime;

    Term xi = tru(), xi_prime = tru();
    bool swept = false;
    Context ctx(m + 1);
    for (int iter = 0;; ++iter) {
      tick();
      Term post = simplify(and_t(sp.spec.post, xi), ctx);
      std::vector<Term> hyps = base_hyp;
      hyps.push_back(psi_prime);
      hyps.push_back(xi_prime);
      Term hyp = simplify(and_t(hyps), ctx);
      if (depth == 0) r.step_pre = hyp;
      std::optional<Term> obligation;
      Validity st = step(sp, qp, hyp, post, m + 1, depth, max_depth, obligation, r);
      if (st == Validity::Valid) return verified(r);
      if (!swept) {
        swept = true;
        if (sweep(p, spec, m + 1, r)) return;
      }
      if (!obligation) return unknown(r, reason_.empty() ? "inductive step not provable" : reason_);
      if (iter >= opt_.strengthen_cap) return unknown(r, "strengthening limit reached");
      Term chi_prime = strengthen_candidates(*obligation, hyp, hyps, ctx);
      if (is_true(chi_prime)) return unknown(r, "inductive step not provable and no strengthening found");
      auto chi = lift_to_p(chi_prime, sp.program, dinv);
      if (!chi) return unknown(r, "strengthening mentions variables without a known difference");
      for (std::int64_t n = 1; n <= m; ++n) {
        FixedResult fr = check_fixed_n(sp.spec.pre, sp.program, *chi, n, cfg_, opt_.unroll_budget);
        if (fr.status != Validity::Valid)
          return unknown(r, "strengthening " + to_string(*chi) + " fails at N=" + std::to_string(n));
      }
      ++r.iterations;
      if (depth == 0)
        r.strengthenings.push_back({chi_prime, simplify(subst_n(*chi, nm1())), *chi});
      xi = simplify(and_t(xi, *chi), ctx);
      xi_prime = shift_to_q(xi, sp.program, dinv);
    }
  }

 private:
  EngineOptions opt_;
  Clock2 clock_;
  SolverConfig cfg_;
  std::string reason_;

  void tick() const {
    if (clock_.expired()) throw Timeout();
  }

  static void verified(VerifyResult& r) {
    r.verdict = Verdict::Verified;
    r.message = "Verified";
  }

  static void unknown(VerifyResult& r, const std::string& why) {
    r.verdict = Verdict::Unknown;
    r.reason = why;
    r.message = "Unknown: " + why;
  }

  void falsified(VerifyResult& r, const FixedResult& fr, std::int64_t n) {
    r.verdict = Verdict::Falsified;
    r.message = "Counterexample found!";
    r.witness = fr.witness;
    r.witness_n = n;
    r.replayed = fr.replayed;
  }

  // Checks N = lo..hi by unrolling. False when the verdict is settled.
  bool base_cases(const Program& p, const Spec& spec, std::int64_t lo, std::int64_t hi, VerifyResult& r) {
    for (std::int64_t n = lo; n <= hi; ++n) {
      tick();
      FixedResult fr = check_fixed_n(spec.pre, p, spec.post, n, cfg_, opt_.unroll_budget);
      if (fr.status == Validity::Invalid) {
        falsified(r, fr, n);
        return false;
      }
      if (fr.status == Validity::Unknown) {
        unknown(r, "base case undecided at N=" + std::to_string(n) + ": " + fr.reason);
        return false;
      }
    }
    return true;
  }

  bool sweep(const Program& p, const Spec& spec, std::int64_t from, VerifyResult& r) {
    for (std::int64_t n = from; n <= opt_.base_bound; ++n) {
      if (clock_.expired()) return false;
      FixedResult fr;
      try {
        fr = check_fixed_n(spec.pre, p, spec.post, n, cfg_, opt_.unroll_budget);
      } catch (const std::exception&) {
        return false;
      }
      if (fr.status == Validity::Invalid) {
        falsified(r, fr, n);
        return true;
      }
    }
    return false;
  }

  bool pre_inherited(const SsaProgram& sp, const std::map<std::string, Term>& d0, std::int64_t nmin) {
    const Term& pre = sp.spec.pre;
    if (is_true(pre)) return true;
    std::map<std::string, Term> m;
    for (auto& [v, d] : d0) {
      int dims = arity_of(sp.program, v);
      if (dims == 0) {
        m[v] = sub(var(v), d);
      } else {
        auto ix = ix_terms(dims);
        m[v] = lambda(ix_names(dims), sub(select(avar(v, dims), ix), d));
      }
    }
    Term goal = simplify(subst(subst_n(pre, nm1()), m), Context(nmin));
    return check_valid(and_t(ge(param_n(), cst(nmin)), pre), goal, cfg_).status == Validity::Valid;
  }

  Validity step(const SsaProgram& sp, const QAndPeel& qp, const Term& hyp, const Term& post,
                std::int64_t nmin, int depth, int max_depth, std::optional<Term>& obligation,
                VerifyResult& r) {
    const StmtP& peel = qp.peel.body;
    if (has_loop(peel)) {
      if (depth + 1 > max_depth) {
        reason_ = "peel contains a loop beyond the recursion limit";
        return Validity::Unknown;
      }
      return recurse(sp, qp, hyp, post, depth, max_depth, r);
    }
    auto w = wp(post, peel, Context(nmin), opt_.wp_split_bound);
    if (!w) {
      reason_ = "weakest precondition exceeds the split bound";
      return Validity::Unknown;
    }
    obligation = *w;
    return check_valid(hyp, *w, cfg_).status;
  }

  // Discharge {hyp} peel {post} by verifying the peel as a program of its own.
  Validity recurse(const SsaProgram& sp, const QAndPeel& qp, const Term& hyp, const Term& post, int depth,
                   int max_depth, VerifyResult& r) {
    Program inner;
    std::map<std::string, std::string> names;
    std::map<std::string, Term> terms;
    auto declare = [&](const std::string& v, bool counter) {
      std::string s = sanitize(v);
      names[v] = s;
      int d = arity_of(qp.peel, v);
      if (!d) d = arity_of(sp.program, v);
      if (d) {
        inner.arrays[s] = d;
        terms[v] = avar(s, d);
      } else {
        inner.scalars.insert(s);
        if (counter) inner.counters.insert(s);
        terms[v] = var(s);
      }
    };
    for (auto& v : sp.program.scalars) declare(v, sp.program.counters.count(v) > 0);
    for (auto& [a, d] : sp.program.arrays) declare(a, false);
    for (auto& v : qp.peel.scalars)
      if (!names.count(v)) declare(v, qp.peel.counters.count(v) > 0);
    for (auto& [a, d] : qp.peel.arrays)
      if (!names.count(a)) declare(a, false);
    for (auto& c : qp.peel.counters)
      if (!names.count(c)) declare(c, true);
    inner.body = rename_stmt(qp.peel.body, names, terms);
    Spec s{simplify(subst(hyp, terms)), simplify(subst(post, terms))};
    VerifyResult ir;
    Engine nested(opt_, clock_.deadline);
    nested.run(inner, s, ir, depth + 1, max_depth);
    r.recursion_depth = std::max(r.recursion_depth, ir.recursion_depth);
    if (ir.verdict == Verdict::Verified) return Validity::Valid;
    reason_ = "peel with loops not proved: " + ir.reason;
    return Validity::Unknown;
  }

  // Conjuncts of the obligation not implied by the hypotheses, rewritten
  // with the equalities known about the Q state.
  Term strengthen_candidates(const Term& obligation, const Term& hyp, const std::vector<Term>& hyps,
                             const Context& ctx) {
    std::vector<Term> eqs;
    for (auto& h : hyps)
      for (auto& c : conjuncts(simplify(h, ctx))) eqs.push_back(c);
    std::vector<Term> keep;
    for (auto& c : conjuncts(obligation)) {
      Term rc = simplify(rewrite(c, eqs, ctx), ctx);
      if (is_true(rc)) continue;
      if (check_valid(hyp, rc, cfg_).status == Validity::Valid) continue;
      keep.push_back(rc);
    }
    return and_t(keep);
  }

  static Term rewrite(Term t, const std::vector<Term>& eqs, const Context& ctx) {
    for (auto& e : eqs) {
      if (e->kind == Kind::Cmp && e->rel == Rel::Eq) {
        for (int side = 0; side < 2; ++side) {
          const Term& l = e->kids[side];
          const Term& rhs = e->kids[1 - side];
          bool target = l->kind == Kind::Var || (l->kind == Kind::Select && l->kids[0]->kind == Kind::Var);
          if (!target || occurs_term(l, rhs)) continue;
          if (l->kind == Kind::Var && l->name == "N") continue;
          t = replace_subterm(t, l, rhs);
          break;
        }
      } else if (e->kind == Kind::Forall) {
        t = rewrite_forall(t, e, ctx);
      }
    }
    return t;
  }

  static bool occurs_term(const Term& sub, const Term& t) {
    if (same(sub, t)) return true;
    for (auto& k : t->kids)
      if (occurs_term(sub, k)) return true;
    return false;
  }

  // forall v in [lo,hi) :: A[v] == e rewrites ground reads A[t] with t in range.
  static Term rewrite_forall(const Term& t, const Term& fa, const Context& ctx) {
    const Term& body = fa->kids[2];
    if (body->kind != Kind::Cmp || body->rel != Rel::Eq) return t;
    const Term& l = body->kids[0];
    if (l->kind != Kind::Select || l->kids.size() != 2 || l->kids[0]->kind != Kind::Var ||
        !is_var(l->kids[1], fa->name))
      return t;
    const std::string arr = l->kids[0]->name;
    std::function<Term(const Term&)> walk = [&](const Term& x) -> Term {
      if (x->kind == Kind::Select && x->kids.size() == 2 && is_var(x->kids[0], arr)) {
        const Term& i = x->kids[1];
        if (free_vars(i).size() <= 1 && !occurs(fa->name, i) && ctx.prove_le(fa->kids[0], i) &&
            ctx.prove_lt(i, fa->kids[1]))
          return subst1(body->kids[1], fa->name, i);
      }
      if (x->kids.empty() || is_quant(x) || x->kind == Kind::Lambda) return x;
      std::vector<Term> ks;
      for (auto& k : x->kids) ks.push_back(walk(k));
      return with_kids(x, ks);
    };
    return walk(t);
  }
};

void finish(VerifyResult& r, Clock::time_point t0, std::size_t q0) {
  r.millis = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  r.solver_queries = solver_stats().queries - q0;
}

}  // namespace

VerifyResult verify(const Program& p, const Spec& spec, const EngineOptions& opt) {
  auto t0 = Clock::now();
  std::size_t q0 = solver_stats().queries;
  auto deadline = t0 + std::chrono::milliseconds(static_cast<long long>(opt.timeout_s * 1000));
  VerifyResult r;
  r.base_width = opt.base_width;
  try {
    Engine e(opt, deadline);
    e.run(p, spec, r, 0, std::max(1, nesting_depth(p)));
  } catch (const std::exception& ex) {
    r.verdict = Verdict::Unknown;
    r.reason = Clock::now() > deadline ? "time budget exhausted" : ex.what();
    r.message = "Unknown: " + r.reason;
  }
  finish(r, t0, q0);
  return r;
}

namespace {

bool has_exists(const Term& t) {
  if (t->kind == Kind::Exists) return true;
  for (auto& k : t->kids)
    if (has_exists(k)) return true;
  return false;
}

}  // namespace

VerifyResult verify_existential(const Program& p, const Spec& spec, const EngineOptions& opt) {
  auto t0 = Clock::now();
  std::size_t q0 = solver_stats().queries;
  VerifyResult total;
  total.verdict = Verdict::Verified;
  total.message = "Verified";
  auto remaining = [&] {
    EngineOptions o = opt;
    double used = std::chrono::duration<double>(Clock::now() - t0).count();
    o.timeout_s = std::max(0.5, opt.timeout_s - used);
    return o;
  };
  auto absorb = [&](const VerifyResult& r) {
    total.iterations += r.iterations;
    total.recursion_depth = std::max(total.recursion_depth, r.recursion_depth);
    total.base_width = std::max(total.base_width, r.base_width);
    for (auto& s : r.strengthenings) total.strengthenings.push_back(s);
    if (r.invariant) total.invariant = r.invariant;
    if (total.ssa_source.empty()) {
      total.ssa_source = r.ssa_source;
      total.q_source = r.q_source;
      total.peel_source = r.peel_source;
    }
  };
  for (auto& c : conjuncts(spec.post)) {
    VerifyResult done;
    bool ok = false;
    if (c->kind == Kind::Exists) {
      std::vector<Term> cands{cst(0), cst(1), nm1(), sub(param_n(), cst(2))};
      for (auto& w : cands) {
        Term inst = and_t(in_range(w, c->kids[0], c->kids[1]), subst1(c->kids[2], c->name, w));
        VerifyResult r = verify(p, {spec.pre, simplify(inst)}, remaining());
        if (r.verdict == Verdict::Verified) {
          absorb(r);
          ok = true;
          break;
        }
      }
    }
    if (!ok) {
      VerifyResult r = verify(p, {spec.pre, c}, remaining());
      absorb(r);
      if (r.verdict == Verdict::Falsified) {
        r.iterations = total.iterations;
        finish(r, t0, q0);
        return r;
      }
      if (r.verdict == Verdict::Unknown) {
        total.verdict = Verdict::Unknown;
        total.reason = r.reason;
        total.message = r.message;
      }
    }
  }
  finish(total, t0, q0);
  return total;
}

VerifyResult verify_program(const Program& p, const Spec& spec, const EngineOptions& opt) {
  reset_fresh_names();
  if (!p.unsupported.empty()) {
    VerifyResult r;
    r.reason = "unsupported construct: " + p.unsupported.front();
    r.message = "Unknown: " + r.reason;
    return r;
  }
  if (has_exists(spec.post)) return verify_existential(p, spec, opt);
  return verify(p, spec, opt);
}

}  // namespace diffy
