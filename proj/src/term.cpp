#include "diffy/term.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace diffy {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

Term make(Kind k, Sort s, int arity, std::vector<Term> kids, std::int64_t value = 0,
          std::string name = {}, Rel rel = Rel::Eq, std::vector<std::string> params = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->sort = s;
  n->arity = arity;
  n->value = value;
  n->name = std::move(name);
  n->rel = rel;
  n->params = std::move(params);
  n->kids = std::move(kids);
  std::size_t h = static_cast<std::size_t>(k) * 1315423911u;
  h = mix(h, static_cast<std::size_t>(value));
  h = mix(h, std::hash<std::string>{}(n->name));
  h = mix(h, static_cast<std::size_t>(rel));
  for (const auto& p : n->params) h = mix(h, std::hash<std::string>{}(p));
  for (const auto& c : n->kids) h = mix(h, c->hash);
  n->hash = h;
  return n;
}

void require(bool ok, const char* what) {
  if (!ok) throw TermError(what);
}

thread_local std::uint64_t g_fresh = 0;

}  // namespace

std::string fresh_name(const std::string& base) {
  return base + "$b" + std::to_string(++g_fresh);
}

void reset_fresh_names() { g_fresh = 0; }

Term cst(std::int64_t v) { return make(Kind::Const, Sort::Int, 0, {}, v); }
Term var(const std::string& name) { return make(Kind::Var, Sort::Int, 0, {}, 0, name); }
Term bvar(const std::string& name) { return make(Kind::Var, Sort::Bool, 0, {}, 0, name); }
Term avar(const std::string& name, int arity) {
  return make(Kind::Var, Sort::Array, arity, {}, 0, name);
}
Term param_n() { return var("N"); }

Term add(std::vector<Term> xs) {
  std::vector<Term> flat;
  std::int64_t c = 0;
  for (auto& x : xs) {
    require(x->sort == Sort::Int, "add: non-integer operand");
    if (x->kind == Kind::Add) {
      for (auto& k : x->kids) flat.push_back(k);
    } else if (x->kind == Kind::Const) {
      c += x->value;
    } else {
      flat.push_back(x);
    }
  }
  if (c != 0 || flat.empty()) flat.push_back(cst(c));
  if (flat.size() == 1) return flat[0];
  return make(Kind::Add, Sort::Int, 0, std::move(flat));
}
Term add(const Term& a, const Term& b) { return add(std::vector<Term>{a, b}); }
Term neg(const Term& a) {
  if (a->kind == Kind::Const) return cst(-a->value);
  return mul(cst(-1), a);
}
Term sub(const Term& a, const Term& b) { return add(a, neg(b)); }

Term mul(std::vector<Term> xs) {
  std::vector<Term> flat;
  std::int64_t c = 1;
  for (auto& x : xs) {
    require(x->sort == Sort::Int, "mul: non-integer operand");
    if (x->kind == Kind::Mul) {
      for (auto& k : x->kids) {
        if (k->kind == Kind::Const)
          c *= k->value;
        else
          flat.push_back(k);
      }
    } else if (x->kind == Kind::Const) {
      c *= x->value;
    } else {
      flat.push_back(x);
    }
  }
  if (c == 0) return cst(0);
  if (flat.empty()) return cst(c);
  if (c != 1) flat.insert(flat.begin(), cst(c));
  if (flat.size() == 1) return flat[0];
  return make(Kind::Mul, Sort::Int, 0, std::move(flat));
}
Term mul(const Term& a, const Term& b) { return mul(std::vector<Term>{a, b}); }

Term div_t(const Term& a, const Term& b) {
  require(a->sort == Sort::Int && b->sort == Sort::Int, "div: sort");
  return make(Kind::Div, Sort::Int, 0, {a, b});
}
Term mod_t(const Term& a, const Term& b) {
  require(a->sort == Sort::Int && b->sort == Sort::Int, "mod: sort");
  return make(Kind::Mod, Sort::Int, 0, {a, b});
}

Term select(const Term& arr, std::vector<Term> idx) {
  require(arr->sort == Sort::Array, "select: not an array");
  require(static_cast<int>(idx.size()) == arr->arity, "select: index count mismatch");
  std::vector<Term> kids{arr};
  for (auto& i : idx) kids.push_back(i);
  return make(Kind::Select, Sort::Int, 0, std::move(kids));
}

Term store(const Term& arr, std::vector<Term> idx, const Term& val) {
  require(arr->sort == Sort::Array, "store: not an array");
  require(static_cast<int>(idx.size()) == arr->arity, "store: index count mismatch");
  std::vector<Term> kids{arr};
  for (auto& i : idx) kids.push_back(i);
  kids.push_back(val);
  return make(Kind::Store, Sort::Array, arr->arity, std::move(kids));
}

Term lambda(std::vector<std::string> params, const Term& body) {
  int ar = static_cast<int>(params.size());
  return make(Kind::Lambda, Sort::Array, ar, {body}, 0, {}, Rel::Eq, std::move(params));
}

Term ite(const Term& c, const Term& a, const Term& b) {
  require(c->sort == Sort::Bool, "ite: condition not boolean");
  require(a->sort == b->sort && a->arity == b->arity, "ite: branch sorts differ");
  if (is_true(c)) return a;
  if (is_false(c)) return b;
  return make(Kind::Ite, a->sort, a->arity, {c, a, b});
}

Term tru() { return make(Kind::BoolConst, Sort::Bool, 0, {}, 1); }
Term fls() { return make(Kind::BoolConst, Sort::Bool, 0, {}, 0); }
Term blit(bool b) { return b ? tru() : fls(); }

Term cmp(Rel r, const Term& a, const Term& b) {
  require(a->sort == Sort::Int && b->sort == Sort::Int, "cmp: non-integer operand");
  return make(Kind::Cmp, Sort::Bool, 0, {a, b}, 0, {}, r);
}
Term eq(const Term& a, const Term& b) { return cmp(Rel::Eq, a, b); }
Term ne(const Term& a, const Term& b) { return cmp(Rel::Ne, a, b); }
Term lt(const Term& a, const Term& b) { return cmp(Rel::Lt, a, b); }
Term le(const Term& a, const Term& b) { return cmp(Rel::Le, a, b); }
Term gt(const Term& a, const Term& b) { return cmp(Rel::Gt, a, b); }
Term ge(const Term& a, const Term& b) { return cmp(Rel::Ge, a, b); }

Term not_t(const Term& a) {
  require(a->sort == Sort::Bool, "not: sort");
  if (is_true(a)) return fls();
  if (is_false(a)) return tru();
  if (a->kind == Kind::Not) return a->kids[0];
  return make(Kind::Not, Sort::Bool, 0, {a});
}

Term and_t(std::vector<Term> xs) {
  std::vector<Term> flat;
  for (auto& x : xs) {
    require(x->sort == Sort::Bool, "and: sort");
    if (is_true(x)) continue;
    if (is_false(x)) return fls();
    if (x->kind == Kind::And) {
      for (auto& k : x->kids) flat.push_back(k);
    } else {
      flat.push_back(x);
    }
  }
  if (flat.empty()) return tru();
  if (flat.size() == 1) return flat[0];
  return make(Kind::And, Sort::Bool, 0, std::move(flat));
}
Term and_t(const Term& a, const Term& b) { return and_t(std::vector<Term>{a, b}); }

Term or_t(std::vector<Term> xs) {
  std::vector<Term> flat;
  for (auto& x : xs) {
    require(x->sort == Sort::Bool, "or: sort");
    if (is_false(x)) continue;
    if (is_true(x)) return tru();
    if (x->kind == Kind::Or) {
      for (auto& k : x->kids) flat.push_back(k);
    } else {
      flat.push_back(x);
    }
  }
  if (flat.empty()) return fls();
  if (flat.size() == 1) return flat[0];
  return make(Kind::Or, Sort::Bool, 0, std::move(flat));
}
Term or_t(const Term& a, const Term& b) { return or_t(std::vector<Term>{a, b}); }

Term implies(const Term& a, const Term& b) {
  require(a->sort == Sort::Bool && b->sort == Sort::Bool, "implies: sort");
  if (is_true(a)) return b;
  if (is_false(a) || is_true(b)) return tru();
  return make(Kind::Implies, Sort::Bool, 0, {a, b});
}

Term forall_t(const std::string& v, const Term& lo, const Term& hi, const Term& body) {
  require(body->sort == Sort::Bool, "forall: body sort");
  if (is_true(body)) return tru();
  return make(Kind::Forall, Sort::Bool, 0, {lo, hi, body}, 0, v);
}
Term exists_t(const std::string& v, const Term& lo, const Term& hi, const Term& body) {
  require(body->sort == Sort::Bool, "exists: body sort");
  if (is_false(body)) return fls();
  return make(Kind::Exists, Sort::Bool, 0, {lo, hi, body}, 0, v);
}

Term in_range(const Term& t, const Term& lo, const Term& hi) {
  return and_t(le(lo, t), lt(t, hi));
}

Term with_kids(const Term& t, std::vector<Term> kids) {
  bool unchanged = kids.size() == t->kids.size();
  for (std::size_t i = 0; unchanged && i < kids.size(); ++i)
    unchanged = kids[i].get() == t->kids[i].get();
  if (unchanged) return t;
  switch (t->kind) {
    case Kind::Add: return add(std::move(kids));
    case Kind::Mul: return mul(std::move(kids));
    case Kind::Div: return div_t(kids[0], kids[1]);
    case Kind::Mod: return mod_t(kids[0], kids[1]);
    case Kind::Select: {
      std::vector<Term> idx(kids.begin() + 1, kids.end());
      return select(kids[0], std::move(idx));
    }
    case Kind::Store: {
      std::vector<Term> idx(kids.begin() + 1, kids.end() - 1);
      return store(kids[0], std::move(idx), kids.back());
    }
    case Kind::Lambda: return lambda(t->params, kids[0]);
    case Kind::Ite: return ite(kids[0], kids[1], kids[2]);
    case Kind::Cmp: return cmp(t->rel, kids[0], kids[1]);
    case Kind::Not: return not_t(kids[0]);
    case Kind::And: return and_t(std::move(kids));
    case Kind::Or: return or_t(std::move(kids));
    case Kind::Implies: return implies(kids[0], kids[1]);
    case Kind::Forall: return forall_t(t->name, kids[0], kids[1], kids[2]);
    case Kind::Exists: return exists_t(t->name, kids[0], kids[1], kids[2]);
    default: return t;
  }
}

bool is_const(const Term& t, std::int64_t* v) {
  if (t->kind != Kind::Const) return false;
  if (v) *v = t->value;
  return true;
}
bool is_true(const Term& t) { return t->kind == Kind::BoolConst && t->value != 0; }
bool is_false(const Term& t) { return t->kind == Kind::BoolConst && t->value == 0; }
bool is_var(const Term& t, const std::string& name) {
  return t->kind == Kind::Var && t->name == name;
}
bool is_quant(const Term& t) { return t->kind == Kind::Forall || t->kind == Kind::Exists; }

int compare(const Term& a, const Term& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  if (a->sort != b->sort) return a->sort < b->sort ? -1 : 1;
  if (a->arity != b->arity) return a->arity < b->arity ? -1 : 1;
  if (a->value != b->value) return a->value < b->value ? -1 : 1;
  if (a->rel != b->rel) return a->rel < b->rel ? -1 : 1;
  if (int c = a->name.compare(b->name)) return c < 0 ? -1 : 1;
  if (a->params != b->params) return a->params < b->params ? -1 : 1;
  if (a->kids.size() != b->kids.size()) return a->kids.size() < b->kids.size() ? -1 : 1;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (int c = compare(a->kids[i], b->kids[i])) return c;
  return 0;
}

bool same(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash) return false;
  return compare(a, b) == 0;
}

namespace {

void collect_free(const Term& t, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (t->kind) {
    case Kind::Var:
      if (!bound.count(t->name)) out.insert(t->name);
      return;
    case Kind::Forall:
    case Kind::Exists: {
      collect_free(t->kids[0], bound, out);
      collect_free(t->kids[1], bound, out);
      bool fresh = bound.insert(t->name).second;
      collect_free(t->kids[2], bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case Kind::Lambda: {
      std::vector<std::string> added;
      for (auto& p : t->params)
        if (bound.insert(p).second) added.push_back(p);
      collect_free(t->kids[0], bound, out);
      for (auto& p : added) bound.erase(p);
      return;
    }
    default:
      for (auto& k : t->kids) collect_free(k, bound, out);
  }
}

}  // namespace

std::set<std::string> free_vars(const Term& t) {
  std::set<std::string> bound, out;
  collect_free(t, bound, out);
  return out;
}

bool occurs(const std::string& v, const Term& t) { return free_vars(t).count(v) > 0; }

bool mentions_prefix(const Term& t, const std::string& prefix) {
  for (auto& v : free_vars(t))
    if (v.compare(0, prefix.size(), prefix) == 0) return true;
  return false;
}

std::size_t term_size(const Term& t) {
  std::size_t n = 1;
  for (auto& k : t->kids) n += term_size(k);
  return n;
}

Term subst(const Term& t, const std::map<std::string, Term>& m) {
  if (m.empty()) return t;
  switch (t->kind) {
    case Kind::Var: {
      auto it = m.find(t->name);
      return it == m.end() ? t : it->second;
    }
    case Kind::Const:
    case Kind::BoolConst:
      return t;
    case Kind::Forall:
    case Kind::Exists: {
      Term lo = subst(t->kids[0], m);
      Term hi = subst(t->kids[1], m);
      std::map<std::string, Term> inner = m;
      inner.erase(t->name);
      Term body = t->kids[2];
      std::string v = t->name;
      if (!inner.empty()) {
        auto fv = free_vars(body);
        bool capture = false;
        for (auto& [k, val] : inner)
          if (fv.count(k) && occurs(v, val)) capture = true;
        if (capture) {
          std::string nv = fresh_name(v);
          body = subst(body, {{v, var(nv)}});
          v = nv;
        }
        body = subst(body, inner);
      }
      if (v == t->name && lo.get() == t->kids[0].get() && hi.get() == t->kids[1].get() &&
          body.get() == t->kids[2].get())
        return t;
      return t->kind == Kind::Forall ? forall_t(v, lo, hi, body) : exists_t(v, lo, hi, body);
    }
    case Kind::Lambda: {
      std::map<std::string, Term> inner = m;
      for (auto& p : t->params) inner.erase(p);
      if (inner.empty()) return t;
      Term body = t->kids[0];
      std::vector<std::string> ps = t->params;
      auto fv = free_vars(body);
      for (auto& p : ps) {
        bool capture = false;
        for (auto& [k, val] : inner)
          if (fv.count(k) && occurs(p, val)) capture = true;
        if (capture) {
          std::string np = fresh_name(p);
          body = subst(body, {{p, var(np)}});
          p = np;
        }
      }
      return lambda(ps, subst(body, inner));
    }
    default: {
      std::vector<Term> kids;
      kids.reserve(t->kids.size());
      for (auto& k : t->kids) kids.push_back(subst(k, m));
      return with_kids(t, std::move(kids));
    }
  }
}

Term subst1(const Term& t, const std::string& v, const Term& val) { return subst(t, {{v, val}}); }

Term replace_subterm(const Term& t, const Term& from, const Term& to) {
  if (same(t, from)) return to;
  if (t->kids.empty()) return t;
  if (is_quant(t) || t->kind == Kind::Lambda) {
    auto fv = free_vars(from);
    bool shadow = is_quant(t) ? fv.count(t->name) > 0 : false;
    if (t->kind == Kind::Lambda)
      for (auto& p : t->params) shadow = shadow || fv.count(p) > 0;
    if (shadow) {
      if (!is_quant(t)) return t;
      std::vector<Term> kids{replace_subterm(t->kids[0], from, to),
                             replace_subterm(t->kids[1], from, to), t->kids[2]};
      return with_kids(t, std::move(kids));
    }
  }
  std::vector<Term> kids;
  for (auto& k : t->kids) kids.push_back(replace_subterm(k, from, to));
  return with_kids(t, std::move(kids));
}

std::vector<Term> conjuncts(const Term& f) {
  std::vector<Term> out;
  std::function<void(const Term&)> go = [&](const Term& t) {
    if (t->kind == Kind::And) {
      for (auto& k : t->kids) go(k);
    } else if (!is_true(t)) {
      out.push_back(t);
    }
  };
  go(f);
  return out;
}

std::string rel_str(Rel r) {
  switch (r) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
    case Rel::Eq: return "==";
    case Rel::Ne: return "!=";
  }
  return "?";
}

namespace {

// Precedence levels, higher binds tighter.
int prec(const Term& t) {
  switch (t->kind) {
    case Kind::Implies: return 1;
    case Kind::Or: return 2;
    case Kind::And: return 3;
    case Kind::Cmp: return 5;
    case Kind::Add: return 6;
    case Kind::Mul:
      if (!t->kids.empty() && t->kids[0]->kind == Kind::Const && t->kids[0]->value < 0) return 8;
      return 7;
    case Kind::Div:
    case Kind::Mod: return 7;
    case Kind::Not: return 8;
    case Kind::Const: return t->value < 0 ? 8 : 10;
    default: return 10;
  }
}

void print(std::ostream& os, const Term& t);

void print_at(std::ostream& os, const Term& t, int min_prec) {
  if (prec(t) < min_prec) {
    os << '(';
    print(os, t);
    os << ')';
  } else {
    print(os, t);
  }
}

// Split a product into (coefficient, rest) for sign-aware sum printing.
std::pair<std::int64_t, Term> coeff_split(const Term& t) {
  if (t->kind == Kind::Const) return {t->value, nullptr};
  if (t->kind == Kind::Mul && t->kids[0]->kind == Kind::Const) {
    std::vector<Term> rest(t->kids.begin() + 1, t->kids.end());
    return {t->kids[0]->value, rest.size() == 1 ? rest[0] : mul(rest)};
  }
  return {1, t};
}

void print_product(std::ostream& os, std::int64_t c, const Term& rest) {
  if (!rest) {
    os << c;
    return;
  }
  if (c == -1) {
    os << '-';
    print_at(os, rest, 8);
    return;
  }
  if (c != 1) os << c << '*';
  print_at(os, rest, 7);
}

void print(std::ostream& os, const Term& t) {
  switch (t->kind) {
    case Kind::Const: os << t->value; return;
    case Kind::BoolConst: os << (t->value ? "true" : "false"); return;
    case Kind::Var: os << t->name; return;
    case Kind::Add: {
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        auto [c, rest] = coeff_split(t->kids[i]);
        if (i == 0) {
          print_product(os, c, rest);
        } else if (c < 0) {
          os << " - ";
          print_product(os, -c, rest);
        } else {
          os << " + ";
          print_product(os, c, rest);
        }
      }
      return;
    }
    case Kind::Mul: {
      auto [c, rest] = coeff_split(t);
      if (c != 1 || !rest) {
        print_product(os, c, rest);
        return;
      }
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        if (i) os << '*';
        print_at(os, t->kids[i], 8);
      }
      return;
    }
    case Kind::Div:
    case Kind::Mod:
      print_at(os, t->kids[0], 7);
      os << (t->kind == Kind::Div ? " / " : " % ");
      print_at(os, t->kids[1], 8);
      return;
    case Kind::Select: {
      if (t->kids[0]->kind == Kind::Var) {
        os << t->kids[0]->name;
      } else {
        os << '(';
        print(os, t->kids[0]);
        os << ')';
      }
      for (std::size_t i = 1; i < t->kids.size(); ++i) {
        os << '[';
        print(os, t->kids[i]);
        os << ']';
      }
      return;
    }
    case Kind::Store: {
      os << "store(";
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        if (i) os << ", ";
        print(os, t->kids[i]);
      }
      os << ')';
      return;
    }
    case Kind::Lambda: {
      os << "(lambda ";
      for (std::size_t i = 0; i < t->params.size(); ++i) os << (i ? ", " : "") << t->params[i];
      os << " :: ";
      print(os, t->kids[0]);
      os << ')';
      return;
    }
    case Kind::Ite:
      os << '(';
      print_at(os, t->kids[0], 2);
      os << " ? ";
      print(os, t->kids[1]);
      os << " : ";
      print(os, t->kids[2]);
      os << ')';
      return;
    case Kind::Cmp:
      print_at(os, t->kids[0], 6);
      os << ' ' << rel_str(t->rel) << ' ';
      print_at(os, t->kids[1], 6);
      return;
    case Kind::Not:
      os << '!';
      print_at(os, t->kids[0], 9);
      return;
    case Kind::And:
    case Kind::Or: {
      const char* op = t->kind == Kind::And ? " && " : " || ";
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        if (i) os << op;
        print_at(os, t->kids[i], prec(t) + 1);
      }
      return;
    }
    case Kind::Implies:
      print_at(os, t->kids[0], 2);
      os << " ==> ";
      print_at(os, t->kids[1], 1);
      return;
    case Kind::Forall:
    case Kind::Exists:
      os << '(' << (t->kind == Kind::Forall ? "forall " : "exists ") << t->name << " in [";
      print(os, t->kids[0]);
      os << ", ";
      print(os, t->kids[1]);
      os << ") :: ";
      print(os, t->kids[2]);
      os << ')';
      return;
  }
}

}  // namespace

std::string to_string(const Term& t) {
  if (!t) return "<null>";
  std::ostringstream os;
  print(os, t);
  return os.str();
}

}  // namespace diffy
