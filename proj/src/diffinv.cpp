#include "diffy/diffinv.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>

#include "diffy/interp.hpp"
#include "diffy/simplify.hpp"

namespace diffy {

using Rat = boost::multiprecision::cpp_rational;

std::string index_param(int k) { return "ix#" + std::to_string(k); }

namespace {

Term nm1() { return sub(param_n(), cst(1)); }

std::vector<Term> index_terms(int dims) {
  std::vector<Term> out;
  for (int k = 0; k < dims; ++k) out.push_back(var(index_param(k)));
  return out;
}

std::vector<std::string> index_names(int dims) {
  std::vector<std::string> out;
  for (int k = 0; k < dims; ++k) out.push_back(index_param(k));
  return out;
}

Term in_domain(const std::vector<Term>& ix) {
  std::vector<Term> cs;
  for (auto& i : ix) cs.push_back(in_range(i, cst(0), nm1()));
  return and_t(cs);
}

Context with_index_ranges(Context c, int dims) {
  for (int k = 0; k < dims; ++k) c = c.with(index_param(k), cst(0), sub(param_n(), cst(2)));
  return c;
}

std::vector<Term> index_range_hyps(int dims) {
  std::vector<Term> out;
  for (auto& i : index_terms(dims)) out.push_back(in_range(i, cst(0), nm1()));
  return out;
}

int arity_of(const Program& p, const std::string& v) {
  auto it = p.arrays.find(v);
  return it == p.arrays.end() ? 0 : it->second;
}

bool only_vars(const Term& t, const std::set<std::string>& allowed) {
  for (auto& v : free_vars(t))
    if (!allowed.count(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Precondition equalities: x == e(N) and forall v0..vk :: A[v0..vk] == e.

struct PreEq {
  std::string name;
  int dims = 0;
  std::vector<std::string> bound;
  std::vector<std::pair<Term, Term>> ranges;  // [lo, hi) per bound variable
  Term rhs;
};

std::vector<PreEq> pre_equalities(const Program& p, const Term& pre) {
  std::vector<PreEq> out;
  for (auto& c : conjuncts(pre)) {
    PreEq e;
    Term f = c;
    while (f->kind == Kind::Forall) {
      e.bound.push_back(f->name);
      e.ranges.push_back({f->kids[0], f->kids[1]});
      f = f->kids[2];
    }
    if (f->kind != Kind::Cmp || f->rel != Rel::Eq) continue;
    std::set<std::string> allowed(e.bound.begin(), e.bound.end());
    allowed.insert("N");
    bool ok_ranges = true;
    for (auto& [lo, hi] : e.ranges) ok_ranges = ok_ranges && only_vars(lo, {"N"}) && only_vars(hi, {"N"});
    if (!ok_ranges) continue;
    for (int side = 0; side < 2; ++side) {
      Term l = f->kids[side], r = f->kids[1 - side];
      if (!only_vars(r, allowed)) continue;
      if (e.bound.empty() && l->kind == Kind::Var && l->sort == Sort::Int &&
          p.scalars.count(l->name) && !p.counters.count(l->name)) {
        e.name = l->name;
      } else if (!e.bound.empty() && l->kind == Kind::Select && l->kids[0]->kind == Kind::Var &&
                 l->kids.size() == e.bound.size() + 1) {
        bool direct = true;
        for (std::size_t k = 0; k < e.bound.size(); ++k) direct = direct && is_var(l->kids[k + 1], e.bound[k]);
        if (!direct) continue;
        e.name = l->kids[0]->name;
        e.dims = static_cast<int>(e.bound.size());
      } else {
        continue;
      }
      e.rhs = r;
      out.push_back(e);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact polynomial fitting.

struct Point {
  std::vector<std::int64_t> x;
  std::int64_t y;
};

std::vector<std::vector<int>> monomials(std::size_t k, int deg) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(k, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i == k) {
      out.push_back(e);
      return;
    }
    for (int d = 0; d <= left; ++d) {
      e[i] = d;
      rec(i + 1, left - d);
    }
    e[i] = 0;
  };
  rec(0, deg);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int sa = 0, sb = 0;
    for (int v : a) sa += v;
    for (int v : b) sb += v;
    return sa < sb;
  });
  return out;
}

__int128 mono_value(const std::vector<int>& e, const std::vector<std::int64_t>& x) {
  __int128 v = 1;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int k = 0; k < e[i]; ++k) v *= x[i];
  return v;
}

std::optional<Term> fit_poly(const std::vector<Point>& pts, const std::vector<std::string>& vars, int deg) {
  if (pts.empty()) return cst(0);
  auto monos = monomials(vars.size(), deg);
  std::size_t m = monos.size();
  // distinct rows, evenly subsampled
  std::map<std::vector<std::int64_t>, std::int64_t> uniq;
  for (auto& p : pts) {
    auto [it, fresh] = uniq.emplace(p.x, p.y);
    if (!fresh && it->second != p.y) return std::nullopt;
  }
  std::vector<std::pair<std::vector<std::int64_t>, std::int64_t>> rows(uniq.begin(), uniq.end());
  const std::size_t cap = 400;
  if (rows.size() > cap) {
    std::vector<std::pair<std::vector<std::int64_t>, std::int64_t>> pick;
    for (std::size_t k = 0; k < cap; ++k) pick.push_back(rows[k * rows.size() / cap]);
    rows = std::move(pick);
  }
  // incremental row echelon form
  std::vector<std::vector<Rat>> basis;
  std::vector<std::size_t> pivot;
  for (auto& [x, y] : rows) {
    std::vector<Rat> r(m + 1);
    for (std::size_t j = 0; j < m; ++j) r[j] = Rat(static_cast<long long>(mono_value(monos[j], x)));
    r[m] = Rat(static_cast<long long>(y));
    for (std::size_t b = 0; b < basis.size(); ++b) {
      if (r[pivot[b]] == 0) continue;
      Rat f = r[pivot[b]];
      for (std::size_t j = 0; j <= m; ++j) r[j] -= f * basis[b][j];
    }
    std::size_t pc = m;
    for (std::size_t j = 0; j < m; ++j)
      if (r[j] != 0) {
        pc = j;
        break;
      }
    if (pc == m) {
      if (r[m] != 0) return std::nullopt;
      continue;
    }
    Rat inv = 1 / r[pc];
    for (auto& v : r) v *= inv;
    for (auto& b : basis) {
      if (b[pc] == 0) continue;
      Rat f = b[pc];
      for (std::size_t j = 0; j <= m; ++j) b[j] -= f * r[j];
    }
    basis.push_back(std::move(r));
    pivot.push_back(pc);
  }
  std::vector<std::int64_t> coef(m, 0);
  for (std::size_t b = 0; b < basis.size(); ++b) {
    const Rat& v = basis[b][m];
    if (denominator(v) != 1) return std::nullopt;
    coef[pivot[b]] = static_cast<std::int64_t>(numerator(v));
  }
  for (auto& p : pts) {
    __int128 s = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (coef[j]) s += static_cast<__int128>(coef[j]) * mono_value(monos[j], p.x);
    if (s != p.y) return std::nullopt;
  }
  std::vector<Term> parts;
  for (std::size_t j = 0; j < m; ++j) {
    if (!coef[j]) continue;
    std::vector<Term> f{cst(coef[j])};
    for (std::size_t i = 0; i < vars.size(); ++i)
      for (int k = 0; k < monos[j][i]; ++k) f.push_back(var(vars[i]));
    parts.push_back(mul(f));
  }
  return simplify(add(parts));
}

std::optional<Term> fit_any_degree(const std::vector<Point>& pts, const std::vector<std::string>& vars) {
  for (int deg = 0; deg <= 2; ++deg)
    if (auto t = fit_poly(pts, vars, deg)) return t;
  return std::nullopt;
}

bool eval_cond(const Term& c, const std::vector<std::string>& vars, const std::vector<std::int64_t>& x) {
  Env e;
  std::map<std::string, std::int64_t> loc;
  for (std::size_t i = 0; i < vars.size(); ++i) loc[vars[i]] = x[i];
  e.n = loc["N"];
  return eval_bool(c, e, loc);
}

// Candidate split conditions for array deltas: cells before a counter
// (lexicographically for pairs of counters).
std::vector<Term> split_candidates(const std::vector<std::string>& counters, int dims) {
  std::vector<Term> out;
  for (int m = 0; m < dims; ++m)
    for (auto& c : counters) {
      out.push_back(lt(var(index_param(m)), var(c)));
      out.push_back(le(var(index_param(m)), var(c)));
    }
  for (int m0 = 0; m0 < dims; ++m0)
    for (int m1 = 0; m1 < dims; ++m1) {
      if (m0 == m1) continue;
      for (std::size_t a = 0; a < counters.size(); ++a)
        for (std::size_t b = a + 1; b < counters.size(); ++b) {
          Term i0 = var(index_param(m0)), i1 = var(index_param(m1));
          Term c1 = var(counters[a]), c2 = var(counters[b]);
          out.push_back(or_t(lt(i0, c1), and_t(eq(i0, c1), lt(i1, c2))));
        }
    }
  return out;
}

std::optional<Term> fit_delta(const std::vector<Point>& pts, const std::vector<std::string>& vars,
                              const std::vector<std::string>& counters, int dims) {
  if (auto t = fit_any_degree(pts, vars)) return t;
  for (auto& c : split_candidates(counters, dims)) {
    std::vector<Point> yes, no;
    for (auto& p : pts) (eval_cond(c, vars, p.x) ? yes : no).push_back(p);
    if (yes.empty() || no.empty()) continue;
    auto a = fit_any_degree(yes, vars);
    if (!a) continue;
    auto b = fit_any_degree(no, vars);
    if (!b) continue;
    return ite(c, *a, *b);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Program structure.

void collect_loops(const StmtP& s, std::vector<std::string>& outer, std::vector<std::string>& order,
                   std::map<std::string, std::vector<std::string>>& enclosing,
                   std::map<std::string, const Stmt*>& loops) {
  switch (s->kind) {
    case SKind::Seq:
      for (auto& x : s->body) collect_loops(x, outer, order, enclosing, loops);
      return;
    case SKind::If:
      collect_loops(s->body[0], outer, order, enclosing, loops);
      collect_loops(s->body[1], outer, order, enclosing, loops);
      return;
    case SKind::For:
      if (!loops.count(s->name)) order.push_back(s->name);
      enclosing[s->name] = outer;
      loops[s->name] = s.get();
      outer.push_back(s->name);
      collect_loops(s->body[0], outer, order, enclosing, loops);
      outer.pop_back();
      return;
    default: return;
  }
}

void pair_structure(const StmtP& q, const StmtP& p, std::vector<BranchPair>& branches) {
  auto qi = items(q), pi = items(p);
  if (qi.size() != pi.size()) {
    if (has_loop(q) || has_loop(p))
      throw DiffInvError(DiffInvError::Kind::StructureMismatch, "loop structure of Q and P differs");
    return;
  }
  bool kinds = true;
  for (std::size_t k = 0; k < qi.size(); ++k) kinds = kinds && qi[k]->kind == pi[k]->kind;
  if (!kinds) {
    if (has_loop(q) || has_loop(p))
      throw DiffInvError(DiffInvError::Kind::StructureMismatch, "loop structure of Q and P differs");
    return;
  }
  for (std::size_t k = 0; k < qi.size(); ++k) {
    const StmtP& a = qi[k];
    const StmtP& b = pi[k];
    if (a->kind == SKind::For) {
      if (a->name != b->name)
        throw DiffInvError(DiffInvError::Kind::StructureMismatch, "loop counters differ: " + a->name);
      pair_structure(a->body[0], b->body[0], branches);
    } else if (a->kind == SKind::If) {
      branches.push_back({to_string(b->rhs), same(simplify(a->rhs), simplify(b->rhs))});
      pair_structure(a->body[0], b->body[0], branches);
      pair_structure(a->body[1], b->body[1], branches);
    }
  }
}

// ---------------------------------------------------------------------------
// Guess phase: joint symbolic runs at small N.

struct Visit {
  std::vector<std::int64_t> key;  // enclosing counter values, then the iteration
  std::map<std::string, Term> scalars;
  std::map<std::string, SymArray> arrays;
};

using Trace = std::map<std::string, std::vector<Visit>>;

struct Layout {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::string>> enclosing;
  std::map<std::string, std::set<std::string>> written;
};

Layout layout_of(const StmtP& body) {
  Layout l;
  std::vector<std::string> outer;
  std::map<std::string, const Stmt*> loops;
  collect_loops(body, outer, l.order, l.enclosing, loops);
  for (auto& [c, s] : loops) {
    auto& ws = l.written[c];
    for (auto& w : written_vars(s->body[0])) ws.insert(w);
  }
  return l;
}

void install_recorder(SymState& st, const Layout& lay, Trace& trace) {
  st.on_loop_head = [&lay, &trace](const Stmt& loop, std::int64_t iter, const SymState& s) {
    Visit v;
    auto enc = lay.enclosing.find(loop.name);
    if (enc != lay.enclosing.end())
      for (auto& c : enc->second) {
        std::int64_t x = 0;
        auto it = s.scalars.find(c);
        if (it != s.scalars.end()) is_const(it->second, &x);
        v.key.push_back(x);
      }
    v.key.push_back(iter);
    auto w = lay.written.find(loop.name);
    if (w != lay.written.end())
      for (auto& name : w->second) {
        if (auto it = s.scalars.find(name); it != s.scalars.end()) v.scalars[name] = it->second;
        if (auto it = s.arrays.find(name); it != s.arrays.end()) v.arrays[name] = it->second;
      }
    trace[loop.name].push_back(std::move(v));
  };
}

std::vector<std::vector<std::int64_t>> tuples(std::int64_t n, int dims) {
  std::vector<std::vector<std::int64_t>> out;
  if (n <= 0) return out;
  std::vector<std::int64_t> cur(dims, 0);
  while (true) {
    out.push_back(cur);
    int d = dims - 1;
    while (d >= 0 && ++cur[d] == n) cur[d--] = 0;
    if (d < 0) break;
  }
  return out;
}

Term eval_at(const Term& t, std::int64_t n, const std::vector<std::int64_t>& idx) {
  std::map<std::string, Term> m{{"N", cst(n)}};
  for (std::size_t k = 0; k < idx.size(); ++k) m[index_param(static_cast<int>(k))] = cst(idx[k]);
  return simplify(subst(t, m));
}

// Input states for Q at n and P at n-1 (run as the N-1 instance at N = n).
void joint_inputs(const Program& prog, const std::set<std::string>& inputs, const Term& pre,
                  const std::map<std::string, Term>& delta0, std::int64_t n, SymState& q, SymState& p) {
  q = symbolic_inputs(prog, n);
  p = symbolic_inputs(prog, n);
  for (auto& e : pre_equalities(prog, pre)) {
    if (!inputs.count(e.name)) continue;
    if (e.dims == 0) {
      q.scalars[e.name] = simplify(subst1(e.rhs, "N", cst(n)));
      continue;
    }
    auto it = q.arrays.find(e.name);
    if (it == q.arrays.end()) continue;
    for (auto& idx : tuples(n, e.dims)) {
      std::map<std::string, Term> m{{"N", cst(n)}};
      bool inside = true;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        std::int64_t lo, hi;
        if (!is_const(simplify(subst1(e.ranges[k].first, "N", cst(n))), &lo) ||
            !is_const(simplify(subst1(e.ranges[k].second, "N", cst(n))), &hi) || idx[k] < lo || idx[k] >= hi)
          inside = false;
        m[e.bound[k]] = cst(idx[k]);
      }
      if (inside) it->second.cells[flat_index(n, idx)] = simplify(subst(e.rhs, m));
    }
  }
  for (auto& v : inputs) {
    Term d = delta0.count(v) ? delta0.at(v) : cst(0);
    if (auto it = q.scalars.find(v); it != q.scalars.end()) {
      p.scalars[v] = simplify(sub(it->second, eval_at(d, n, {})));
      continue;
    }
    auto it = q.arrays.find(v);
    if (it == q.arrays.end()) continue;
    SymArray& pa = p.arrays[v];
    for (auto& idx : tuples(n, it->second.dims)) {
      bool dom = true;
      for (auto i : idx) dom = dom && i < n - 1;
      std::size_t k = flat_index(n, idx);
      pa.cells[k] = dom ? simplify(sub(it->second.cells[k], eval_at(d, n, idx)))
                        : var("p#" + cell_symbol(v, idx));
    }
  }
}

struct Samples {
  std::map<std::string, std::map<std::string, std::vector<Point>>> pts;  // counter -> var -> points
  std::map<std::string, std::set<std::string>> top;
};

void record_samples(const Trace& tq, const Trace& tp, std::int64_t n, const Layout& lay,
                    const Program& prog, Samples& out) {
  for (auto& [c, vq] : tq) {
    auto itp = tp.find(c);
    auto& top = out.top[c];
    const auto& written = lay.written.at(c);
    if (itp == tp.end() || itp->second.size() != vq.size()) {
      for (auto& w : written) top.insert(w);
      continue;
    }
    const auto& vp = itp->second;
    for (std::size_t k = 0; k < vq.size(); ++k) {
      if (vq[k].key != vp[k].key) {
        for (auto& w : written) top.insert(w);
        break;
      }
      std::vector<std::int64_t> base{n};
      base.insert(base.end(), vq[k].key.begin(), vq[k].key.end());
      for (auto& w : written) {
        if (top.count(w)) continue;
        int dims = arity_of(prog, w);
        if (dims == 0) {
          auto a = vq[k].scalars.find(w), b = vp[k].scalars.find(w);
          if (a == vq[k].scalars.end() || b == vp[k].scalars.end()) continue;
          std::int64_t d;
          if (!is_const(simplify(sub(a->second, b->second)), &d)) {
            top.insert(w);
            continue;
          }
          out.pts[c][w].push_back({base, d});
        } else {
          auto a = vq[k].arrays.find(w), b = vp[k].arrays.find(w);
          if (a == vq[k].arrays.end() || b == vp[k].arrays.end()) continue;
          for (auto& idx : tuples(n - 1, dims)) {
            std::size_t f = flat_index(n, idx);
            std::int64_t d;
            if (!is_const(simplify(sub(a->second.cells[f], b->second.cells[f])), &d)) {
              top.insert(w);
              break;
            }
            std::vector<std::int64_t> x = base;
            x.insert(x.end(), idx.begin(), idx.end());
            out.pts[c][w].push_back({x, d});
          }
        }
      }
    }
  }
}

using Guesses = std::map<std::string, std::map<std::string, Delta>>;

Guesses guess(const Program& qprog, const Program& pprog, const std::set<std::string>& inputs,
              const Term& pre, const std::map<std::string, Term>& delta0, const Layout& lay,
              const DiffInvOptions& opt) {
  Samples s;
  for (std::int64_t n = opt.nmin + 1; n <= opt.nmin + opt.samples; ++n) {
    SymState q, p;
    joint_inputs(qprog, inputs, pre, delta0, n, q, p);
    q.define_large = p.define_large = false;
    q.budget = p.budget = opt.budget;
    Trace tq, tp;
    install_recorder(q, lay, tq);
    install_recorder(p, lay, tp);
    try {
      sym_exec(qprog.body, q);
      sym_exec(pprog.body, p);
    } catch (const InterpError&) {
      break;
    }
    record_samples(tq, tp, n, lay, qprog, s);
  }
  Guesses g;
  for (auto& c : lay.order) {
    std::vector<std::string> counters = lay.enclosing.at(c);
    counters.push_back(c);
    for (auto& w : lay.written.at(c)) {
      Delta d;
      d.dims = arity_of(qprog, w);
      if (!s.top[c].count(w)) {
        std::vector<std::string> vars{"N"};
        vars.insert(vars.end(), counters.begin(), counters.end());
        for (int k = 0; k < d.dims; ++k) vars.push_back(index_param(k));
        if (auto t = fit_delta(s.pts[c][w], vars, counters, d.dims)) {
          d.top = false;
          d.expr = *t;
        }
      }
      g[c][w] = d;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Formal phase: symbolic N, loop heads abstracted by fresh P-side symbols.

using SideMap = std::map<std::string, Term>;

struct Joint {
  SideMap q, p;
};

struct Frame {
  Context ctx;
  std::vector<Term> hyps;
  std::vector<std::string> counters;
};

class Formal {
 public:
  Formal(const Program& prog, const Term& pre, std::int64_t nmin, const SolverConfig& cfg, Guesses g,
         bool refine)
      : prog_(prog), pre_(pre), nmin_(nmin), cfg_(cfg), guesses_(std::move(g)), refine_(refine) {}

  Joint run(const StmtP& q, const StmtP& p, Joint st) {
    Frame f;
    f.ctx = Context(nmin_);
    f.hyps = {ge(param_n(), cst(nmin_)), pre_};
    exec_items(items(q), items(p), st, f);
    return st;
  }

  bool failed = false;
  std::vector<LoopInvariant> loops;
  std::map<std::string, bool> branches;
  Guesses guesses_out;

  Term lookup(const SideMap& m, const std::string& v) const {
    auto it = m.find(v);
    return it != m.end() ? it->second : var_term(prog_, v);
  }

 private:
  const Program& prog_;
  Term pre_;
  std::int64_t nmin_;
  SolverConfig cfg_;
  Guesses guesses_;
  bool refine_;
  int next_ = 0;

  Term ev(const Term& e, const SideMap& m, const Context& ctx) {
    std::map<std::string, Term> s;
    for (auto& v : free_vars(e))
      if (auto it = m.find(v); it != m.end()) s[v] = it->second;
    return simplify(subst(e, s), ctx);
  }

  bool valid(const std::vector<Term>& hyps, const Term& goal) {
    return check_valid(and_t(hyps), goal, cfg_).status == Validity::Valid;
  }

  void exec_single(const StmtP& s, SideMap& m, const Frame& f) {
    switch (s->kind) {
      case SKind::Seq:
        for (auto& x : s->body) exec_single(x, m, f);
        return;
      case SKind::Assign: m[s->name] = ev(s->rhs, m, f.ctx); return;
      case SKind::Store: {
        std::vector<Term> idx;
        for (auto& i : s->idx) idx.push_back(ev(i, m, f.ctx));
        m[s->name] = simplify(store(lookup(m, s->name), idx, ev(s->rhs, m, f.ctx)), f.ctx);
        return;
      }
      case SKind::ArrayDef: m[s->name] = ev(s->rhs, m, f.ctx); return;
      case SKind::If: {
        Term c = ev(s->rhs, m, f.ctx);
        if (is_true(c)) return exec_single(s->body[0], m, f);
        if (is_false(c)) return exec_single(s->body[1], m, f);
        SideMap a = m, b = m;
        exec_single(s->body[0], a, f);
        exec_single(s->body[1], b, f);
        m = merge(c, a, b, f);
        return;
      }
      case SKind::For:
        throw DiffInvError(DiffInvError::Kind::StructureMismatch, "unpaired loop " + s->name);
    }
  }

  SideMap merge(const Term& c, const SideMap& a, const SideMap& b, const Frame& f) {
    SideMap out = a;
    std::set<std::string> keys;
    for (auto& [k, v] : a) keys.insert(k);
    for (auto& [k, v] : b) keys.insert(k);
    for (auto& k : keys) {
      Term x = lookup(a, k), y = lookup(b, k);
      if (same(x, y)) {
        out[k] = x;
        continue;
      }
      if (x->sort == Sort::Array) {
        int d = x->arity;
        auto ix = index_terms(d);
        out[k] = lambda(index_names(d), simplify(ite(c, select(x, ix), select(y, ix)), f.ctx));
      } else {
        out[k] = simplify(ite(c, x, y), f.ctx);
      }
    }
    return out;
  }

  void exec_items(const std::vector<StmtP>& qi, const std::vector<StmtP>& pi, Joint& st, const Frame& f) {
    bool lockstep = qi.size() == pi.size();
    for (std::size_t k = 0; lockstep && k < qi.size(); ++k) lockstep = qi[k]->kind == pi[k]->kind;
    if (!lockstep) {
      for (auto& s : qi)
        if (has_loop(s)) throw DiffInvError(DiffInvError::Kind::StructureMismatch, "Q and P differ around a loop");
      for (auto& s : pi)
        if (has_loop(s)) throw DiffInvError(DiffInvError::Kind::StructureMismatch, "Q and P differ around a loop");
      for (auto& s : qi) exec_single(s, st.q, f);
      for (auto& s : pi) exec_single(s, st.p, f);
      return;
    }
    for (std::size_t k = 0; k < qi.size(); ++k) {
      const StmtP& a = qi[k];
      const StmtP& b = pi[k];
      switch (a->kind) {
        case SKind::For: exec_loop(*a, *b, st, f); break;
        case SKind::If: exec_if(*a, *b, st, f); break;
        default:
          exec_single(a, st.q, f);
          exec_single(b, st.p, f);
      }
    }
  }

  void exec_if(const Stmt& a, const Stmt& b, Joint& st, const Frame& f) {
    Term cq = ev(a.rhs, st.q, f.ctx);
    Term cp = ev(b.rhs, st.p, f.ctx);
    bool synced = same(cq, cp);
    if (!synced && term_size(cq) + term_size(cp) < 400)
      synced = valid(f.hyps, and_t(implies(cq, cp), implies(cp, cq)));
    std::string key = to_string(b.rhs);
    auto [it, fresh] = branches.emplace(key, synced);
    if (!fresh) it->second = it->second && synced;
    if (synced) cq = cp;
    if (synced && is_true(cp)) return exec_items(items(a.body[0]), items(b.body[0]), st, f);
    if (synced && is_false(cp)) return exec_items(items(a.body[1]), items(b.body[1]), st, f);
    Joint x = st, y = st;
    if (synced || (has_loop(a.body[0]) || has_loop(a.body[1]))) {
      exec_items(items(a.body[0]), items(b.body[0]), x, f);
      exec_items(items(a.body[1]), items(b.body[1]), y, f);
    } else {
      exec_single(a.body[0], x.q, f);
      exec_single(b.body[0], x.p, f);
      exec_single(a.body[1], y.q, f);
      exec_single(b.body[1], y.p, f);
    }
    st.q = merge(cq, x.q, y.q, f);
    st.p = merge(cp, x.p, y.p, f);
  }

  bool stores_in_domain(const StmtP& s, const std::string& w, const Context& ctx) {
    switch (s->kind) {
      case SKind::Seq:
        for (auto& x : s->body)
          if (!stores_in_domain(x, w, ctx)) return false;
        return true;
      case SKind::Store:
        if (s->name != w) return true;
        for (auto& i : s->idx) {
          Term si = simplify(i, ctx);
          if (!ctx.prove_le(cst(0), si) || !ctx.prove_lt(si, nm1())) return false;
        }
        return true;
      case SKind::ArrayDef: return s->name != w;
      case SKind::If: return stores_in_domain(s->body[0], w, ctx) && stores_in_domain(s->body[1], w, ctx);
      case SKind::For:
        return stores_in_domain(s->body[0], w, ctx.with_counter(s->name, simplify(s->rhs, ctx)));
      default: return true;
    }
  }

  bool check(const Joint& st, const std::string& w, const Delta& d, const Term& delta, const Frame& f) {
    Term q = lookup(st.q, w), p = lookup(st.p, w);
    if (d.dims == 0) {
      Term diff = simplify(sub(sub(q, p), delta), f.ctx);
      if (is_const(diff) && to_poly(diff).is_zero()) return true;
      return valid(f.hyps, eq(sub(q, p), delta));
    }
    auto ix = index_terms(d.dims);
    Context c = with_index_ranges(f.ctx, d.dims);
    Term lhs = sub(sub(select(q, ix), select(p, ix)), delta);
    Term diff = simplify(lhs, c);
    std::int64_t v;
    if (is_const(diff, &v) && v == 0) return true;
    std::vector<Term> hyps = f.hyps;
    for (auto& h : index_range_hyps(d.dims)) hyps.push_back(h);
    return valid(hyps, eq(diff, cst(0)));
  }

  // Abstract values of w: P side symbol, Q side p + delta (or unknown).
  void abstract(Joint& st, const std::string& w, const Delta& d, const Term& delta, const Term& ood,
                const std::string& tag, const Context& ctx) {
    if (d.dims == 0) {
      Term p = var("p#" + w + tag);
      st.p[w] = p;
      st.q[w] = d.top ? var("q#" + w + tag) : simplify(add(p, delta), ctx);
      return;
    }
    Term p = avar("p#" + w + tag, d.dims);
    st.p[w] = p;
    if (d.top) {
      st.q[w] = avar("q#" + w + tag, d.dims);
      return;
    }
    auto ix = index_terms(d.dims);
    st.q[w] = lambda(index_names(d.dims), ite(in_domain(ix), add(select(p, ix), delta), select(ood, ix)));
  }

  void exec_loop(const Stmt& lq, const Stmt& lp, Joint& st, const Frame& f) {
    const std::string& c = lq.name;
    Term ub = ev(lq.rhs, st.q, f.ctx);
    Term ubp = ev(lp.rhs, st.p, f.ctx);
    if (lp.name != c || !(same(ub, ubp) || f.ctx.prove_eq(ub, ubp)))
      throw DiffInvError(DiffInvError::Kind::StructureMismatch, "loop bounds differ for " + c);
    std::set<std::string> ws = written_vars(lq.body[0]);
    for (auto& w : written_vars(lp.body[0])) ws.insert(w);
    std::map<std::string, Delta> ds;
    for (auto& w : ws) {
      Delta d;
      d.dims = arity_of(prog_, w);
      if (auto it = guesses_.find(c); it != guesses_.end())
        if (auto jt = it->second.find(w); jt != it->second.end()) d = jt->second;
      ds[w] = d;
    }
    Frame inner = f;
    inner.ctx = f.ctx.with_counter(c, ub);
    inner.hyps.push_back(in_range(var(c), cst(0), ub));
    inner.counters.push_back(c);
    Joint entry = st;
    entry.q.erase(c);
    entry.p.erase(c);
    std::map<std::string, Term> ood;
    for (auto& w : ws)
      if (ds[w].dims > 0) {
        ood[w] = stores_in_domain(lq.body[0], w, inner.ctx)
                     ? lookup(entry.q, w)
                     : avar("q#" + w + "#o" + std::to_string(next_++), ds[w].dims);
      }
    for (std::size_t attempt = 0; attempt <= ws.size() + 1; ++attempt) {
      bool ok = true;
      for (auto& [w, d] : ds) {
        if (d.top) continue;
        if (!check(entry, w, d, subst1(d.expr, c, cst(0)), f)) {
          d.top = true;
          ok = false;
        }
      }
      if (ok) {
        Joint head = entry;
        std::string tag = "#h" + std::to_string(next_++);
        for (auto& [w, d] : ds) abstract(head, w, d, d.expr, ood.count(w) ? ood[w] : Term(), tag, inner.ctx);
        exec_items(items(lq.body[0]), items(lp.body[0]), head, inner);
        for (auto& [w, d] : ds) {
          if (d.top) continue;
          if (!check(head, w, d, subst1(d.expr, c, add(var(c), cst(1))), inner)) {
            d.top = true;
            ok = false;
          }
        }
      }
      if (ok) break;
      if (!refine_) {
        failed = true;
        break;
      }
    }
    std::string tag = "#x" + std::to_string(next_++);
    for (auto& [w, d] : ds)
      abstract(st, w, d, d.top ? Term() : subst1(d.expr, c, ub), ood.count(w) ? ood[w] : Term(), tag, f.ctx);
    st.q[c] = ub;
    st.p[c] = ub;
    LoopInvariant li;
    li.counter = c;
    li.outer = f.counters;
    li.ub = ub;
    li.deltas = ds;
    auto it = std::find_if(loops.begin(), loops.end(), [&](const LoopInvariant& l) { return l.counter == c; });
    if (it != loops.end())
      *it = li;
    else
      loops.push_back(li);
    guesses_out[c] = ds;
  }
};

Joint initial_state(const SsaProgram& sp, const std::map<std::string, Term>& delta0) {
  Joint j;
  for (auto& [v, d] : delta0) {
    int dims = arity_of(sp.program, v);
    if (dims == 0) {
      j.p[v] = sub(var(v), d);
    } else {
      auto ix = index_terms(dims);
      j.p[v] = lambda(index_names(dims), sub(select(avar(v, dims), ix), d));
    }
  }
  return j;
}

std::vector<std::string> all_names(const Program& p) {
  std::vector<std::string> out;
  for (auto& v : p.scalars)
    if (!p.counters.count(v)) out.push_back(v);
  for (auto& [a, d] : p.arrays) out.push_back(a);
  return out;
}

bool has_side_symbols(const Term& t) { return mentions_prefix(t, "p#") || mentions_prefix(t, "q#"); }

void finish(const SsaProgram& sp, const Formal& fm, const Joint& st, DiffInvariant& out) {
  Context ctx(out.nmin);
  for (auto& v : all_names(sp.program)) {
    int dims = arity_of(sp.program, v);
    Term q = fm.lookup(st.q, v), p = fm.lookup(st.p, v);
    Delta d;
    d.dims = dims;
    if (dims == 0) {
      Term t = simplify(sub(q, p), ctx);
      if (only_vars(t, {"N"})) {
        d.top = false;
        d.expr = t;
      }
      if (!sp.originals.count(v) && !has_side_symbols(q) && !same(q, var(v)))
        out.facts.push_back(eq(var(v), q));
    } else {
      auto ix = index_terms(dims);
      Term t = simplify(sub(select(q, ix), select(p, ix)), with_index_ranges(ctx, dims));
      std::set<std::string> allowed{"N"};
      for (auto& n : index_names(dims)) allowed.insert(n);
      if (only_vars(t, allowed)) {
        d.top = false;
        d.expr = t;
      }
      if (!sp.originals.count(v)) {
        Term a = avar(v, dims);
        if (dims == 1) {
          Term cell = simplify(select(q, {nm1()}), ctx);
          if (!has_side_symbols(cell) && !same(cell, select(a, {nm1()})))
            out.facts.push_back(eq(select(a, {nm1()}), cell));
        } else if (dims == 2) {
          std::string b = fresh_name("t");
          for (int side = 0; side < 2; ++side) {
            std::vector<Term> idx = side == 0 ? std::vector<Term>{nm1(), var(b)} : std::vector<Term>{var(b), nm1()};
            Term cell = simplify(select(q, idx), ctx.with(b, cst(0), nm1()));
            if (!has_side_symbols(cell) && !same(cell, select(a, idx)))
              out.facts.push_back(forall_t(b, cst(0), param_n(), eq(select(a, idx), cell)));
          }
        }
      }
    }
    out.exit[v] = d;
  }
}

}  // namespace

StmtP previous_instance(const StmtP& body) {
  return simplify_stmt(subst_stmt(body, {{"N", nm1()}}), Context(1));
}

std::map<std::string, Term> entry_deltas(const Program& p, const Term& pre) {
  std::map<std::string, Term> out;
  for (auto& e : pre_equalities(p, pre)) {
    if (out.count(e.name)) continue;
    Term now = e.rhs, prev = subst1(e.rhs, "N", nm1());
    std::map<std::string, Term> ren;
    for (std::size_t k = 0; k < e.bound.size(); ++k) ren[e.bound[k]] = var(index_param(static_cast<int>(k)));
    Term d = simplify(subst(sub(now, prev), ren));
    if (e.dims > 0) {
      std::vector<Term> conds;
      for (std::size_t k = 0; k < e.bound.size(); ++k) {
        Term ix = var(index_param(static_cast<int>(k)));
        conds.push_back(in_range(ix, e.ranges[k].first, subst1(e.ranges[k].second, "N", nm1())));
      }
      d = simplify(ite(and_t(conds), d, cst(0)), with_index_ranges(Context(1), e.dims));
    }
    std::int64_t v;
    if (is_const(d, &v) && v == 0) continue;
    out[e.name] = d;
  }
  return out;
}

ProductProgram build_product(const StmtP& q, const StmtP& p) {
  ProductProgram pp;
  pp.q = q;
  pp.p = p;
  pair_structure(q, p, pp.branches);
  Layout l = layout_of(q);
  pp.loops = l.order;
  pp.enclosing = l.enclosing;
  return pp;
}

namespace {

Program with_body(const Program& p, const StmtP& body) {
  Program out = p;
  out.body = body;
  return out;
}

}  // namespace

DiffInvariant infer_diff_invariants(const SsaProgram& sp, const QAndPeel& qp, const Term& pre,
                                    const DiffInvOptions& opt) {
  DiffInvariant out;
  out.nmin = opt.nmin;
  out.delta0 = entry_deltas(sp.program, pre);
  StmtP pbody = previous_instance(sp.program.body);
  ProductProgram prod = build_product(qp.q.body, pbody);
  Layout lay = layout_of(qp.q.body);
  Program qprog = with_body(sp.program, qp.q.body);
  Program pprog = with_body(sp.program, pbody);
  Guesses g = guess(qprog, pprog, sp.originals, pre, out.delta0, lay, opt);
  Formal fm(sp.program, pre, opt.nmin, opt.solver, g, true);
  Joint st = fm.run(qp.q.body, pbody, initial_state(sp, out.delta0));
  out.loops = fm.loops;
  for (auto& [c, s] : fm.branches) out.branches.push_back({c, s});
  finish(sp, fm, st, out);
  return out;
}

Validity check_invariant_inductive(const SsaProgram& sp, const QAndPeel& qp, const Term& pre,
                                   const DiffInvariant& d, const DiffInvOptions& opt) {
  Guesses g;
  for (auto& l : d.loops) g[l.counter] = l.deltas;
  StmtP pbody = previous_instance(sp.program.body);
  Formal fm(sp.program, pre, d.nmin, opt.solver, g, false);
  try {
    fm.run(qp.q.body, pbody, initial_state(sp, d.delta0));
  } catch (const DiffInvError&) {
    return Validity::Unknown;
  }
  if (fm.failed) return Validity::Invalid;
  return Validity::Valid;
}

std::string concrete_check(const SsaProgram& sp, const QAndPeel& qp, const Term& pre,
                           const DiffInvariant& d, std::int64_t n, std::mt19937_64& rng,
                           const SolverConfig* solver) {
  Program qprog = with_body(sp.program, qp.q.body);
  Program pprog = with_body(sp.program, previous_instance(sp.program.body));
  auto env = random_env_satisfying(sp.program, pre, n, rng, solver);
  if (!env) return "";  // no input satisfies the precondition at this N
  Layout lay = layout_of(qp.q.body);
  SymState q, p;
  joint_inputs(qprog, sp.originals, pre, d.delta0, n, q, p);
  // concrete inputs: bind every input symbol to its random value
  std::map<std::string, Term> vals;
  for (auto& [v, x] : env->scalars) vals[v] = cst(x);
  for (auto& [a, arr] : env->arrays) {
    auto ts = tuples(n, arr.dims);
    for (auto& idx : ts) vals[cell_symbol(a, idx)] = cst(arr.cells[flat_index(n, idx)]);
  }
  auto bind = [&](SymState& s) {
    for (auto& [v, t] : s.scalars) t = simplify(subst(t, vals));
    for (auto& [a, arr] : s.arrays)
      for (auto& c : arr.cells) c = simplify(subst(c, vals));
    s.define_large = false;
  };
  bind(q);
  bind(p);
  Trace tq, tp;
  install_recorder(q, lay, tq);
  install_recorder(p, lay, tp);
  sym_exec(qprog.body, q);
  sym_exec(pprog.body, p);
  std::map<std::string, const LoopInvariant*> inv;
  for (auto& l : d.loops) inv[l.counter] = &l;
  for (auto& [c, vq] : tq) {
    auto li = inv.find(c);
    if (li == inv.end()) continue;
    auto& vp = tp[c];
    if (vp.size() != vq.size()) return "loop " + c + " visited differently";
    std::vector<std::string> counters = li->second->outer;
    counters.push_back(c);
    for (std::size_t k = 0; k < vq.size(); ++k) {
      std::map<std::string, Term> at{{"N", cst(n)}};
      for (std::size_t j = 0; j < counters.size(); ++j) at[counters[j]] = cst(vq[k].key[j]);
      for (auto& [w, delta] : li->second->deltas) {
        if (delta.top) continue;
        if (delta.dims == 0) {
          auto a = vq[k].scalars.find(w), b = vp[k].scalars.find(w);
          if (a == vq[k].scalars.end() || b == vp[k].scalars.end()) continue;
          Term diff = simplify(sub(sub(a->second, b->second), subst(delta.expr, at)));
          std::int64_t v;
          if (!is_const(diff, &v) || v != 0)
            return "loop " + c + ": delta of " + w + " violated at N=" + std::to_string(n);
          continue;
        }
        auto a = vq[k].arrays.find(w), b = vp[k].arrays.find(w);
        if (a == vq[k].arrays.end() || b == vp[k].arrays.end()) continue;
        for (auto& idx : tuples(n - 1, delta.dims)) {
          std::map<std::string, Term> at2 = at;
          for (std::size_t j = 0; j < idx.size(); ++j) at2[index_param(static_cast<int>(j))] = cst(idx[j]);
          std::size_t f = flat_index(n, idx);
          Term diff = simplify(sub(sub(a->second.cells[f], b->second.cells[f]), subst(delta.expr, at2)));
          std::int64_t v;
          if (!is_const(diff, &v) || v != 0)
            return "loop " + c + ": delta of " + w + " violated at N=" + std::to_string(n);
        }
      }
    }
  }
  for (auto& [v, delta] : d.exit) {
    if (delta.top) continue;
    if (delta.dims == 0) {
      auto a = q.scalars.find(v), b = p.scalars.find(v);
      if (a == q.scalars.end() || b == p.scalars.end()) continue;
      Term diff = simplify(sub(sub(a->second, b->second), eval_at(delta.expr, n, {})));
      std::int64_t x;
      if (!is_const(diff, &x) || x != 0) return "exit delta of " + v + " violated at N=" + std::to_string(n);
      continue;
    }
    auto a = q.arrays.find(v), b = p.arrays.find(v);
    if (a == q.arrays.end() || b == p.arrays.end()) continue;
    for (auto& idx : tuples(n - 1, delta.dims)) {
      std::size_t f = flat_index(n, idx);
      Term diff = simplify(sub(sub(a->second.cells[f], b->second.cells[f]), eval_at(delta.expr, n, idx)));
      std::int64_t x;
      if (!is_const(diff, &x) || x != 0) return "exit delta of " + v + " violated at N=" + std::to_string(n);
    }
  }
  return "";
}

std::vector<std::string> describe(const DiffInvariant& d) {
  std::vector<std::string> out;
  auto line = [](const std::string& v, const Delta& delta) {
    if (delta.top) return v + ": unknown";
    if (delta.dims == 0) return v + "' - " + v + " == " + to_string(delta.expr);
    std::string idx;
    for (int k = 0; k < delta.dims; ++k) idx += (k ? "][" : "") + index_param(k);
    return "forall cells in [0,N-1): " + v + "'[" + idx + "] - " + v + "[" + idx + "] == " + to_string(delta.expr);
  };
  for (auto& l : d.loops)
    for (auto& [w, delta] : l.deltas) out.push_back("loop " + l.counter + ": " + line(w, delta));
  for (auto& [v, delta] : d.exit)
    if (!delta.top && !(is_const(delta.expr) && to_poly(delta.expr).is_zero())) out.push_back("exit: " + line(v, delta));
  return out;
}

}  // namespace diffy
