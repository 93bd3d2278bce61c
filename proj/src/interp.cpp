#include "diffy/interp.hpp"

#include <sstream>

#include "diffy/simplify.hpp"

namespace diffy {

using Locals = std::map<std::string, std::int64_t>;

bool Env::operator==(const Env& o) const {
  if (n != o.n || scalars != o.scalars || arrays.size() != o.arrays.size()) return false;
  for (auto& [k, v] : arrays) {
    auto it = o.arrays.find(k);
    if (it == o.arrays.end() || it->second.dims != v.dims || it->second.cells != v.cells)
      return false;
  }
  return true;
}

std::size_t flat_index(std::int64_t n, const std::vector<std::int64_t>& idx) {
  std::size_t f = 0;
  for (auto i : idx) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
  return f;
}

namespace {

std::size_t cell_count(std::int64_t n, int dims) {
  std::size_t c = 1;
  for (int k = 0; k < dims; ++k) c *= static_cast<std::size_t>(std::max<std::int64_t>(n, 0));
  return c;
}

// All index tuples of a dims-dimensional array of extent n, row-major.
std::vector<std::vector<std::int64_t>> index_tuples(std::int64_t n, int dims) {
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> cur(static_cast<std::size_t>(dims), 0);
  if (n <= 0) return out;
  for (;;) {
    out.push_back(cur);
    int k = dims - 1;
    while (k >= 0 && ++cur[static_cast<std::size_t>(k)] == n) cur[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return out;
}

void check_bounds(const std::string& a, std::int64_t n, const std::vector<std::int64_t>& idx) {
  for (auto i : idx)
    if (i < 0 || i >= n)
      throw InterpError(InterpError::Kind::IndexOutOfBounds,
                        "index " + std::to_string(i) + " out of bounds for " + a + " (N=" +
                            std::to_string(n) + ")");
}

std::int64_t eval_select(const Term& arr, const std::vector<std::int64_t>& idx, const Env& env,
                         const Locals& locals);

std::int64_t checked(std::function<std::int64_t()> f) {
  try {
    return f();
  } catch (const TermError& e) {
    throw InterpError(InterpError::Kind::Overflow, e.what());
  }
}

}  // namespace

std::int64_t eval_int(const Term& t, const Env& env, const Locals& locals) {
  switch (t->kind) {
    case Kind::Const: return t->value;
    case Kind::Var: {
      if (auto it = locals.find(t->name); it != locals.end()) return it->second;
      if (t->name == "N") return env.n;
      if (auto it = env.scalars.find(t->name); it != env.scalars.end()) return it->second;
      throw InterpError(InterpError::Kind::Unbound, "unbound variable " + t->name);
    }
    case Kind::Add: {
      std::int64_t s = 0;
      for (auto& k : t->kids) s = checked([&] { return checked_add(s, eval_int(k, env, locals)); });
      return s;
    }
    case Kind::Mul: {
      std::int64_t s = 1;
      for (auto& k : t->kids) s = checked([&] { return checked_mul(s, eval_int(k, env, locals)); });
      return s;
    }
    case Kind::Div:
    case Kind::Mod: {
      std::int64_t a = eval_int(t->kids[0], env, locals);
      std::int64_t b = eval_int(t->kids[1], env, locals);
      if (b == 0) throw InterpError(InterpError::Kind::DivisionByZero, "division by zero");
      return t->kind == Kind::Div ? euclid_div(a, b) : euclid_mod(a, b);
    }
    case Kind::Select: {
      std::vector<std::int64_t> idx;
      for (std::size_t k = 1; k < t->kids.size(); ++k) idx.push_back(eval_int(t->kids[k], env, locals));
      return eval_select(t->kids[0], idx, env, locals);
    }
    case Kind::Ite:
      return eval_bool(t->kids[0], env, locals) ? eval_int(t->kids[1], env, locals)
                                                : eval_int(t->kids[2], env, locals);
    default:
      throw InterpError(InterpError::Kind::Unsupported, "not an integer term: " + to_string(t));
  }
}

namespace {

std::int64_t eval_select(const Term& arr, const std::vector<std::int64_t>& idx, const Env& env,
                         const Locals& locals) {
  switch (arr->kind) {
    case Kind::Var: {
      auto it = env.arrays.find(arr->name);
      if (it == env.arrays.end())
        throw InterpError(InterpError::Kind::Unbound, "unbound array " + arr->name);
      check_bounds(arr->name, env.n, idx);
      return it->second.cells[flat_index(env.n, idx)];
    }
    case Kind::Store: {
      bool hit = true;
      for (std::size_t k = 0; k < idx.size(); ++k)
        hit = hit && eval_int(arr->kids[k + 1], env, locals) == idx[k];
      if (hit) return eval_int(arr->kids.back(), env, locals);
      return eval_select(arr->kids[0], idx, env, locals);
    }
    case Kind::Lambda: {
      Locals l = locals;
      for (std::size_t k = 0; k < arr->params.size(); ++k) l[arr->params[k]] = idx[k];
      return eval_int(arr->kids[0], env, l);
    }
    case Kind::Ite:
      return eval_bool(arr->kids[0], env, locals) ? eval_select(arr->kids[1], idx, env, locals)
                                                  : eval_select(arr->kids[2], idx, env, locals);
    default:
      throw InterpError(InterpError::Kind::Unsupported, "not an array term: " + to_string(arr));
  }
}

}  // namespace

bool eval_bool(const Term& t, const Env& env, const Locals& locals) {
  switch (t->kind) {
    case Kind::BoolConst: return t->value != 0;
    case Kind::Var: return eval_int(t, env, locals) != 0;
    case Kind::Cmp: {
      std::int64_t a = eval_int(t->kids[0], env, locals), b = eval_int(t->kids[1], env, locals);
      switch (t->rel) {
        case Rel::Lt: return a < b;
        case Rel::Le: return a <= b;
        case Rel::Gt: return a > b;
        case Rel::Ge: return a >= b;
        case Rel::Eq: return a == b;
        case Rel::Ne: return a != b;
      }
      return false;
    }
    case Kind::Not: return !eval_bool(t->kids[0], env, locals);
    case Kind::And:
      for (auto& k : t->kids)
        if (!eval_bool(k, env, locals)) return false;
      return true;
    case Kind::Or:
      for (auto& k : t->kids)
        if (eval_bool(k, env, locals)) return true;
      return false;
    case Kind::Implies:
      return !eval_bool(t->kids[0], env, locals) || eval_bool(t->kids[1], env, locals);
    case Kind::Ite:
      return eval_bool(t->kids[0], env, locals) ? eval_bool(t->kids[1], env, locals)
                                                : eval_bool(t->kids[2], env, locals);
    case Kind::Forall:
    case Kind::Exists: {
      std::int64_t lo = eval_int(t->kids[0], env, locals), hi = eval_int(t->kids[1], env, locals);
      bool fa = t->kind == Kind::Forall;
      Locals l = locals;
      for (std::int64_t v = lo; v < hi; ++v) {
        l[t->name] = v;
        if (eval_bool(t->kids[2], env, l) != fa) return !fa;
      }
      return fa;
    }
    default:
      throw InterpError(InterpError::Kind::Unsupported, "not a formula: " + to_string(t));
  }
}

void execute_stmt(const StmtP& s, Env& env, std::size_t& budget) {
  auto tick = [&] {
    if (budget == 0)
      throw InterpError(InterpError::Kind::UnrollBudgetExceeded, "unroll budget exceeded");
    --budget;
  };
  switch (s->kind) {
    case SKind::Seq:
      for (auto& x : s->body) execute_stmt(x, env, budget);
      return;
    case SKind::Assign:
      tick();
      env.scalars[s->name] = eval_int(s->rhs, env);
      return;
    case SKind::Store: {
      tick();
      auto it = env.arrays.find(s->name);
      if (it == env.arrays.end())
        throw InterpError(InterpError::Kind::Unbound, "unbound array " + s->name);
      std::vector<std::int64_t> idx;
      for (auto& i : s->idx) idx.push_back(eval_int(i, env));
      check_bounds(s->name, env.n, idx);
      std::int64_t v = eval_int(s->rhs, env);
      it->second.cells[flat_index(env.n, idx)] = v;
      return;
    }
    case SKind::ArrayDef: {
      tick();
      ArrayVal a;
      a.dims = s->rhs->arity;
      for (auto& idx : index_tuples(env.n, a.dims)) a.cells.push_back(eval_select(s->rhs, idx, env, {}));
      env.arrays[s->name] = std::move(a);
      return;
    }
    case SKind::If:
      tick();
      execute_stmt(eval_bool(s->rhs, env) ? s->body[0] : s->body[1], env, budget);
      return;
    case SKind::For: {
      std::int64_t ub = eval_int(s->rhs, env);
      std::int64_t c = 0;
      for (; c < ub; ++c) {
        tick();
        env.scalars[s->name] = c;
        execute_stmt(s->body[0], env, budget);
      }
      env.scalars[s->name] = std::max<std::int64_t>(c, 0);
      return;
    }
  }
}

Env execute(const Program& p, Env env, std::size_t budget) {
  for (auto& [a, d] : p.arrays)
    if (!env.arrays.count(a)) env.arrays[a] = ArrayVal{d, std::vector<std::int64_t>(cell_count(env.n, d), 0)};
  execute_stmt(p.body, env, budget);
  return env;
}

std::string env_to_string(const Env& e) {
  std::ostringstream os;
  os << "N=" << e.n;
  for (auto& [k, v] : e.scalars) os << "; " << k << "=" << v;
  for (auto& [k, a] : e.arrays) {
    os << "; " << k << "=[";
    for (std::size_t i = 0; i < a.cells.size(); ++i) os << (i ? "," : "") << a.cells[i];
    os << "]";
  }
  return os.str();
}

Env random_env(const Program& p, std::int64_t n, std::mt19937_64& rng, std::int64_t lo,
               std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  Env e;
  e.n = n;
  for (auto& v : p.scalars)
    if (!p.counters.count(v)) e.scalars[v] = d(rng);
  for (auto& [a, dims] : p.arrays) {
    ArrayVal av;
    av.dims = dims;
    av.cells.resize(cell_count(n, dims));
    for (auto& c : av.cells) c = d(rng);
    e.arrays[a] = std::move(av);
  }
  return e;
}

namespace {

// Make conjuncts of the shape x == e, A[..] == e, A[..] >= e, ... true by
// assignment where possible.
void apply_pattern(const Term& f, Env& env, const Locals& locals) {
  try {
    switch (f->kind) {
      case Kind::And:
        for (auto& k : f->kids) apply_pattern(k, env, locals);
        return;
      case Kind::Forall: {
        std::int64_t lo = eval_int(f->kids[0], env, locals), hi = eval_int(f->kids[1], env, locals);
        Locals l = locals;
        for (std::int64_t v = lo; v < hi && v - lo < 100000; ++v) {
          l[f->name] = v;
          apply_pattern(f->kids[2], env, l);
        }
        return;
      }
      case Kind::Implies:
        if (eval_bool(f->kids[0], env, locals)) apply_pattern(f->kids[1], env, locals);
        return;
      case Kind::Cmp: {
        if (eval_bool(f, env, locals)) return;
        Term lhs = f->kids[0], rhs = f->kids[1];
        Rel r = f->rel;
        auto target = [&](const Term& t) {
          return (t->kind == Kind::Var && env.scalars.count(t->name) && !locals.count(t->name)) ||
                 (t->kind == Kind::Select && t->kids[0]->kind == Kind::Var);
        };
        if (!target(lhs) && target(rhs)) {
          std::swap(lhs, rhs);
          switch (r) {
            case Rel::Lt: r = Rel::Gt; break;
            case Rel::Le: r = Rel::Ge; break;
            case Rel::Gt: r = Rel::Lt; break;
            case Rel::Ge: r = Rel::Le; break;
            default: break;
          }
        }
        if (!target(lhs)) return;
        std::int64_t v = eval_int(rhs, env, locals);
        switch (r) {
          case Rel::Lt: v -= 1; break;
          case Rel::Gt: v += 1; break;
          case Rel::Ne: v += 1; break;
          default: break;
        }
        if (lhs->kind == Kind::Var) {
          env.scalars[lhs->name] = v;
        } else {
          auto it = env.arrays.find(lhs->kids[0]->name);
          if (it == env.arrays.end()) return;
          std::vector<std::int64_t> idx;
          for (std::size_t k = 1; k < lhs->kids.size(); ++k) idx.push_back(eval_int(lhs->kids[k], env, locals));
          for (auto i : idx)
            if (i < 0 || i >= env.n) return;
          it->second.cells[flat_index(env.n, idx)] = v;
        }
        return;
      }
      default: return;
    }
  } catch (const InterpError&) {
  }
}

bool holds(const Term& f, const Env& env) {
  try {
    return eval_bool(f, env);
  } catch (const InterpError&) {
    return false;
  }
}

}  // namespace

std::optional<Env> random_env_satisfying(const Program& p, const Term& pre, std::int64_t n,
                                         std::mt19937_64& rng, const SolverConfig* solver) {
  for (int attempt = 0; attempt < 40; ++attempt) {
    std::int64_t r = attempt < 20 ? 4 : 1;
    Env e = random_env(p, n, rng, -r, r);
    for (int pass = 0; pass < 3 && !holds(pre, e); ++pass) apply_pattern(pre, e, {});
    if (holds(pre, e)) return e;
  }
  if (!solver) return std::nullopt;
  SymState st = symbolic_inputs(p, n);
  Term f = simplify(sym_eval(pre, st));
  std::vector<Term> vals;
  for (auto& [v, t] : st.scalars) vals.push_back(t);
  for (auto& [a, arr] : st.arrays)
    for (auto& c : arr.cells) vals.push_back(c);
  SatResult res = check_sat({f}, *solver, vals);
  if (res.status != SatStatus::Sat) return std::nullopt;
  Env e = random_env(p, n, rng, 0, 0);
  for (auto& [v, t] : st.scalars)
    if (auto it = res.values.find(smt_term(t)); it != res.values.end()) e.scalars[v] = it->second;
  for (auto& [a, arr] : st.arrays)
    for (std::size_t k = 0; k < arr.cells.size(); ++k)
      if (auto it = res.values.find(smt_term(arr.cells[k])); it != res.values.end())
        e.arrays[a].cells[k] = it->second;
  if (!holds(pre, e)) return std::nullopt;
  return e;
}

// ---------------------------------------------------------------------------
// Symbolic execution

std::string cell_symbol(const std::string& array, const std::vector<std::int64_t>& idx) {
  std::string s = array;
  for (auto i : idx) s += "@" + std::to_string(i);
  return s;
}

SymState symbolic_inputs(const Program& p, std::int64_t n) {
  SymState st;
  st.n = n;
  for (auto& v : p.scalars)
    if (!p.counters.count(v)) st.scalars[v] = var(v);
  for (auto& [a, d] : p.arrays) {
    SymArray arr;
    arr.dims = d;
    arr.n = n;
    for (auto& idx : index_tuples(n, d)) arr.cells.push_back(var(cell_symbol(a, idx)));
    st.arrays[a] = std::move(arr);
  }
  return st;
}

namespace {

using SymLocals = std::map<std::string, Term>;

Term sym_select(const Term& arr, const std::vector<Term>& idx, const SymState& st,
                const SymLocals& locals);

std::optional<std::vector<std::int64_t>> const_indices(const std::vector<Term>& idx) {
  std::vector<std::int64_t> out;
  for (auto& i : idx) {
    std::int64_t v;
    if (!is_const(i, &v)) return std::nullopt;
    out.push_back(v);
  }
  return out;
}

Term read_cell(const std::string& a, const std::vector<Term>& idx, const SymState& st) {
  auto it = st.arrays.find(a);
  if (it == st.arrays.end()) {
    // Arrays unknown to the state stay symbolic (e.g. spec-only symbols).
    return select(avar(a, static_cast<int>(idx.size())), idx);
  }
  const SymArray& arr = it->second;
  if (auto c = const_indices(idx)) {
    check_bounds(a, arr.n, *c);
    return arr.cells[flat_index(arr.n, *c)];
  }
  // Symbolic index: case split over all cells.
  auto tuples = index_tuples(arr.n, arr.dims);
  if (tuples.empty()) return cst(0);
  Term out = arr.cells[flat_index(arr.n, tuples.back())];
  for (std::size_t k = tuples.size() - 1; k-- > 0;) {
    std::vector<Term> eqs;
    for (std::size_t d = 0; d < idx.size(); ++d) eqs.push_back(eq(idx[d], cst(tuples[k][d])));
    out = ite(and_t(eqs), arr.cells[flat_index(arr.n, tuples[k])], out);
  }
  return out;
}

Term sym_select(const Term& arr, const std::vector<Term>& idx, const SymState& st,
                const SymLocals& locals) {
  switch (arr->kind) {
    case Kind::Var:
      if (auto it = locals.find(arr->name); it != locals.end())
        return sym_select(it->second, idx, st, {});
      return read_cell(arr->name, idx, st);
    case Kind::Store: {
      std::vector<Term> eqs;
      bool all_hit = true, miss = false;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        Term si = simplify(sym_eval(arr->kids[k + 1], st, locals));
        std::int64_t a, b;
        if (is_const(si, &a) && is_const(idx[k], &b)) {
          if (a != b) miss = true;
        } else {
          all_hit = false;
          eqs.push_back(eq(si, idx[k]));
        }
      }
      if (miss) return sym_select(arr->kids[0], idx, st, locals);
      Term v = sym_eval(arr->kids.back(), st, locals);
      if (all_hit) return v;
      return ite(and_t(eqs), v, sym_select(arr->kids[0], idx, st, locals));
    }
    case Kind::Lambda: {
      SymLocals l = locals;
      for (std::size_t k = 0; k < arr->params.size(); ++k) l[arr->params[k]] = idx[k];
      return sym_eval(arr->kids[0], st, l);
    }
    case Kind::Ite:
      return ite(sym_eval(arr->kids[0], st, locals), sym_select(arr->kids[1], idx, st, locals),
                 sym_select(arr->kids[2], idx, st, locals));
    default:
      throw InterpError(InterpError::Kind::Unsupported, "not an array term: " + to_string(arr));
  }
}

}  // namespace

Term sym_eval(const Term& t, const SymState& st, const SymLocals& locals) {
  switch (t->kind) {
    case Kind::Const:
    case Kind::BoolConst: return t;
    case Kind::Var: {
      if (auto it = locals.find(t->name); it != locals.end()) return it->second;
      if (t->name == "N") return cst(st.n);
      if (auto it = st.scalars.find(t->name); it != st.scalars.end()) return it->second;
      return t;
    }
    case Kind::Select: {
      std::vector<Term> idx;
      for (std::size_t k = 1; k < t->kids.size(); ++k)
        idx.push_back(simplify(sym_eval(t->kids[k], st, locals)));
      return sym_select(t->kids[0], idx, st, locals);
    }
    case Kind::Forall:
    case Kind::Exists: {
      std::int64_t lo, hi;
      Term tl = simplify(sym_eval(t->kids[0], st, locals));
      Term th = simplify(sym_eval(t->kids[1], st, locals));
      if (!is_const(tl, &lo) || !is_const(th, &hi))
        throw InterpError(InterpError::Kind::Unsupported, "quantifier range is not concrete");
      std::vector<Term> parts;
      SymLocals l = locals;
      for (std::int64_t v = lo; v < hi; ++v) {
        l[t->name] = cst(v);
        parts.push_back(simplify(sym_eval(t->kids[2], st, l)));
      }
      return t->kind == Kind::Forall ? and_t(parts) : or_t(parts);
    }
    case Kind::Lambda:
    case Kind::Store:
      throw InterpError(InterpError::Kind::Unsupported, "array-valued term outside a select");
    default: {
      std::vector<Term> ks;
      for (auto& k : t->kids) ks.push_back(sym_eval(k, st, locals));
      return with_kids(t, ks);
    }
  }
}

namespace {

Term define(Term v, SymState& st) {
  if (!st.define_large || term_size(v) <= 48 || v->kind == Kind::Var) return v;
  Term d = var("d#" + std::to_string((*st.next_def)++));
  st.defs.push_back(eq(d, v));
  return d;
}

void tick(SymState& st) {
  if (st.budget == 0)
    throw InterpError(InterpError::Kind::UnrollBudgetExceeded, "unroll budget exceeded");
  --st.budget;
}

}  // namespace

void sym_exec(const StmtP& s, SymState& st) {
  switch (s->kind) {
    case SKind::Seq:
      for (auto& x : s->body) sym_exec(x, st);
      return;
    case SKind::Assign:
      tick(st);
      st.scalars[s->name] = define(simplify(sym_eval(s->rhs, st)), st);
      return;
    case SKind::Store: {
      tick(st);
      auto it = st.arrays.find(s->name);
      if (it == st.arrays.end())
        throw InterpError(InterpError::Kind::Unbound, "unbound array " + s->name);
      std::vector<Term> idx;
      for (auto& i : s->idx) idx.push_back(simplify(sym_eval(i, st)));
      Term v = define(simplify(sym_eval(s->rhs, st)), st);
      SymArray& arr = it->second;
      if (auto c = const_indices(idx)) {
        check_bounds(s->name, arr.n, *c);
        arr.cells[flat_index(arr.n, *c)] = v;
        return;
      }
      auto tuples = index_tuples(arr.n, arr.dims);
      for (std::size_t k = 0; k < tuples.size(); ++k) {
        std::vector<Term> eqs;
        for (std::size_t d = 0; d < idx.size(); ++d) eqs.push_back(eq(idx[d], cst(tuples[k][d])));
        arr.cells[k] = define(simplify(ite(and_t(eqs), v, arr.cells[k])), st);
      }
      return;
    }
    case SKind::ArrayDef: {
      tick(st);
      SymArray arr;
      arr.dims = s->rhs->arity;
      arr.n = st.n;
      for (auto& idx : index_tuples(st.n, arr.dims)) {
        std::vector<Term> ti;
        for (auto i : idx) ti.push_back(cst(i));
        arr.cells.push_back(define(simplify(sym_select(s->rhs, ti, st, {})), st));
      }
      st.arrays[s->name] = std::move(arr);
      return;
    }
    case SKind::If: {
      tick(st);
      Term c = simplify(sym_eval(s->rhs, st));
      if (is_true(c)) return sym_exec(s->body[0], st);
      if (is_false(c)) return sym_exec(s->body[1], st);
      c = define(c, st);
      std::size_t defs_before = st.defs.size();
      SymState other = st;
      other.on_loop_head = st.on_loop_head;
      sym_exec(s->body[0], st);
      sym_exec(s->body[1], other);
      for (auto& [v, t] : other.scalars) {
        auto it = st.scalars.find(v);
        if (it == st.scalars.end()) continue;
        if (!same(it->second, t)) it->second = define(simplify(ite(c, it->second, t)), st);
      }
      for (auto& [a, arr] : other.arrays) {
        auto it = st.arrays.find(a);
        if (it == st.arrays.end() || it->second.cells.size() != arr.cells.size()) {
          st.arrays[a] = arr;
          continue;
        }
        for (std::size_t k = 0; k < arr.cells.size(); ++k)
          if (!same(it->second.cells[k], arr.cells[k]))
            it->second.cells[k] = define(simplify(ite(c, it->second.cells[k], arr.cells[k])), st);
      }
      for (std::size_t k = defs_before; k < other.defs.size(); ++k) st.defs.push_back(other.defs[k]);
      st.budget = std::min(st.budget, other.budget);
      return;
    }
    case SKind::For: {
      Term ub = simplify(sym_eval(s->rhs, st));
      std::int64_t u;
      if (!is_const(ub, &u))
        throw InterpError(InterpError::Kind::Unsupported, "loop bound is not concrete");
      std::int64_t c = 0;
      for (; c < u; ++c) {
        tick(st);
        st.scalars[s->name] = cst(c);
        if (st.on_loop_head) st.on_loop_head(*s, c, st);
        sym_exec(s->body[0], st);
      }
      c = std::max<std::int64_t>(c, 0);
      st.scalars[s->name] = cst(c);
      if (st.on_loop_head) st.on_loop_head(*s, c, st);
      return;
    }
  }
}

FixedResult check_fixed_n(const Term& pre, const Program& p, const Term& post, std::int64_t n,
                          const SolverConfig& cfg, std::size_t budget) {
  FixedResult r;
  SymState st = symbolic_inputs(p, n);
  st.budget = budget;
  const SymState init = st;
  Term pre_t = simplify(sym_eval(pre, init));
  if (is_false(pre_t)) {
    r.status = Validity::Valid;
    return r;
  }
  std::vector<Term> fs;
  Term post_t;
  try {
    sym_exec(p.body, st);
    post_t = simplify(sym_eval(post, st));
  } catch (const InterpError& e) {
    r.reason = e.what();
    return r;
  }
  if (is_true(post_t)) {
    r.status = Validity::Valid;
    return r;
  }
  fs = st.defs;
  fs.push_back(pre_t);
  fs.push_back(not_t(post_t));
  std::vector<Term> vals;
  for (auto& [v, t] : init.scalars) vals.push_back(t);
  for (auto& [a, arr] : init.arrays)
    for (auto& c : arr.cells) vals.push_back(c);
  SatResult res = check_sat(fs, cfg, vals);
  if (res.status == SatStatus::Unsat) {
    r.status = Validity::Valid;
    return r;
  }
  if (res.status == SatStatus::Unknown) {
    r.reason = res.reason;
    return r;
  }
  r.status = Validity::Invalid;
  Env e;
  e.n = n;
  for (auto& [v, t] : init.scalars) {
    auto it = res.values.find(smt_term(t));
    e.scalars[v] = it == res.values.end() ? 0 : it->second;
  }
  for (auto& [a, arr] : init.arrays) {
    ArrayVal av;
    av.dims = arr.dims;
    for (auto& c : arr.cells) {
      auto it = res.values.find(smt_term(c));
      av.cells.push_back(it == res.values.end() ? 0 : it->second);
    }
    e.arrays[a] = std::move(av);
  }
  r.witness = e;
  try {
    Env out = execute(p, e, budget);
    r.replayed = eval_bool(pre, e) && !eval_bool(post, out);
  } catch (const InterpError&) {
    r.replayed = false;
  }
  return r;
}

}  // namespace diffy
