#include "diffy/ast.hpp"

#include <sstream>

namespace diffy {

namespace {

StmtP make_stmt(SKind k, std::string name, std::vector<Term> idx, Term rhs,
                std::vector<StmtP> body) {
  auto s = std::make_shared<Stmt>();
  s->kind = k;
  s->name = std::move(name);
  s->idx = std::move(idx);
  s->rhs = std::move(rhs);
  s->body = std::move(body);
  return s;
}

}  // namespace

StmtP seq(std::vector<StmtP> xs) {
  std::vector<StmtP> flat;
  for (auto& x : xs) {
    if (!x) continue;
    if (x->kind == SKind::Seq)
      for (auto& y : x->body) flat.push_back(y);
    else
      flat.push_back(x);
  }
  return make_stmt(SKind::Seq, {}, {}, nullptr, std::move(flat));
}

StmtP assign(const std::string& x, const Term& e) {
  return make_stmt(SKind::Assign, x, {}, e, {});
}
StmtP store_stmt(const std::string& a, std::vector<Term> idx, const Term& v) {
  return make_stmt(SKind::Store, a, std::move(idx), v, {});
}
StmtP array_def(const std::string& a, const Term& t) {
  return make_stmt(SKind::ArrayDef, a, {}, t, {});
}
StmtP if_stmt(const Term& c, const StmtP& then_s, const StmtP& else_s) {
  return make_stmt(SKind::If, {}, {}, c, {seq({then_s}), seq({else_s})});
}
StmtP for_stmt(const std::string& counter, const Term& ub, const StmtP& body) {
  return make_stmt(SKind::For, counter, {}, ub, {seq({body})});
}

std::vector<StmtP> items(const StmtP& s) {
  if (!s) return {};
  if (s->kind == SKind::Seq) {
    std::vector<StmtP> out;
    for (auto& x : s->body)
      for (auto& y : items(x)) out.push_back(y);
    return out;
  }
  return {s};
}

bool is_empty(const StmtP& s) { return items(s).empty(); }

Term var_term(const Program& p, const std::string& name) {
  auto it = p.arrays.find(name);
  if (it != p.arrays.end()) return avar(name, it->second);
  return var(name);
}

StmtP map_exprs(const StmtP& s, const std::function<Term(const Term&)>& f) {
  switch (s->kind) {
    case SKind::Seq: {
      std::vector<StmtP> xs;
      for (auto& x : s->body) xs.push_back(map_exprs(x, f));
      return seq(xs);
    }
    case SKind::Assign: return assign(s->name, f(s->rhs));
    case SKind::Store: {
      std::vector<Term> idx;
      for (auto& i : s->idx) idx.push_back(f(i));
      return store_stmt(s->name, idx, f(s->rhs));
    }
    case SKind::ArrayDef: return array_def(s->name, f(s->rhs));
    case SKind::If: return if_stmt(f(s->rhs), map_exprs(s->body[0], f), map_exprs(s->body[1], f));
    case SKind::For: return for_stmt(s->name, f(s->rhs), map_exprs(s->body[0], f));
  }
  return s;
}

StmtP subst_stmt(const StmtP& s, const std::map<std::string, Term>& m) {
  if (m.empty()) return s;
  if (s->kind == SKind::For && m.count(s->name)) {
    std::map<std::string, Term> inner = m;
    inner.erase(s->name);
    return for_stmt(s->name, subst(s->rhs, m), subst_stmt(s->body[0], inner));
  }
  if (s->kind == SKind::For) return for_stmt(s->name, subst(s->rhs, m), subst_stmt(s->body[0], m));
  if (s->kind == SKind::Seq) {
    std::vector<StmtP> xs;
    for (auto& x : s->body) xs.push_back(subst_stmt(x, m));
    return seq(xs);
  }
  if (s->kind == SKind::If)
    return if_stmt(subst(s->rhs, m), subst_stmt(s->body[0], m), subst_stmt(s->body[1], m));
  return map_exprs(s, [&](const Term& t) { return subst(t, m); });
}

namespace {

void collect(const StmtP& s, std::set<std::string>& w, std::set<std::string>& r,
             std::set<std::string>& bound) {
  auto reads = [&](const Term& t) {
    for (auto& v : free_vars(t))
      if (!bound.count(v)) r.insert(v);
  };
  switch (s->kind) {
    case SKind::Seq:
      for (auto& x : s->body) collect(x, w, r, bound);
      return;
    case SKind::Assign:
      w.insert(s->name);
      reads(s->rhs);
      return;
    case SKind::Store:
      w.insert(s->name);
      r.insert(s->name);  // a store keeps the other cells
      for (auto& i : s->idx) reads(i);
      reads(s->rhs);
      return;
    case SKind::ArrayDef:
      w.insert(s->name);
      reads(s->rhs);
      return;
    case SKind::If:
      reads(s->rhs);
      collect(s->body[0], w, r, bound);
      collect(s->body[1], w, r, bound);
      return;
    case SKind::For: {
      reads(s->rhs);
      bool fresh = bound.insert(s->name).second;
      collect(s->body[0], w, r, bound);
      if (fresh) bound.erase(s->name);
      return;
    }
  }
}

}  // namespace

std::set<std::string> written_vars(const StmtP& s) {
  std::set<std::string> w, r, b;
  collect(s, w, r, b);
  return w;
}

std::set<std::string> read_vars(const StmtP& s) {
  std::set<std::string> w, r, b;
  collect(s, w, r, b);
  return r;
}

bool has_loop(const StmtP& s) { return nesting_depth(s) > 0; }

int nesting_depth(const StmtP& s) {
  if (!s) return 0;
  switch (s->kind) {
    case SKind::Seq: {
      int d = 0;
      for (auto& x : s->body) d = std::max(d, nesting_depth(x));
      return d;
    }
    case SKind::If: return std::max(nesting_depth(s->body[0]), nesting_depth(s->body[1]));
    case SKind::For: return 1 + nesting_depth(s->body[0]);
    default: return 0;
  }
}

int nesting_depth(const Program& p) { return nesting_depth(p.body); }

std::size_t stmt_count(const StmtP& s) {
  if (!s) return 0;
  std::size_t n = s->kind == SKind::Seq ? 0 : 1;
  for (auto& x : s->body) n += stmt_count(x);
  return n;
}

namespace {

void emit(std::ostream& os, const StmtP& s, int ind) {
  std::string pad(static_cast<std::size_t>(ind) * 2, ' ');
  switch (s->kind) {
    case SKind::Seq:
      for (auto& x : s->body) emit(os, x, ind);
      return;
    case SKind::Assign:
    case SKind::ArrayDef:
      os << pad << s->name << " = " << to_string(s->rhs) << ";\n";
      return;
    case SKind::Store:
      os << pad << s->name;
      for (auto& i : s->idx) os << '[' << to_string(i) << ']';
      os << " = " << to_string(s->rhs) << ";\n";
      return;
    case SKind::If:
      os << pad << "if (" << to_string(s->rhs) << ") {\n";
      emit(os, s->body[0], ind + 1);
      if (!is_empty(s->body[1])) {
        os << pad << "} else {\n";
        emit(os, s->body[1], ind + 1);
      }
      os << pad << "}\n";
      return;
    case SKind::For:
      os << pad << "for (" << s->name << " = 0; " << s->name << " < " << to_string(s->rhs) << "; "
         << s->name << "++) {\n";
      emit(os, s->body[0], ind + 1);
      os << pad << "}\n";
      return;
  }
}

}  // namespace

std::string to_source(const StmtP& s, int indent) {
  std::ostringstream os;
  emit(os, s, indent);
  return os.str();
}

std::string to_source(const Program& p, const Spec* spec) {
  std::ostringstream os;
  if (spec) os << "// assume(" << to_string(spec->pre) << ")\n";
  std::vector<std::string> sc;
  for (auto& v : p.scalars)
    if (!p.counters.count(v)) sc.push_back(v);
  if (!sc.empty()) {
    os << "int ";
    for (std::size_t i = 0; i < sc.size(); ++i) os << (i ? ", " : "") << sc[i];
    os << ";\n";
  }
  for (auto& [a, d] : p.arrays) {
    os << "int " << a;
    for (int k = 0; k < d; ++k) os << "[N]";
    os << ";\n";
  }
  emit(os, p.body, 0);
  if (spec) os << "// assert(" << to_string(spec->post) << ")\n";
  return os.str();
}

bool same_stmt(const StmtP& a, const StmtP& b) {
  if (a->kind != b->kind || a->name != b->name || a->idx.size() != b->idx.size() ||
      a->body.size() != b->body.size())
    return false;
  if ((a->rhs == nullptr) != (b->rhs == nullptr)) return false;
  if (a->rhs && !same(a->rhs, b->rhs)) return false;
  for (std::size_t i = 0; i < a->idx.size(); ++i)
    if (!same(a->idx[i], b->idx[i])) return false;
  for (std::size_t i = 0; i < a->body.size(); ++i)
    if (!same_stmt(a->body[i], b->body[i])) return false;
  return true;
}

}  // namespace diffy
