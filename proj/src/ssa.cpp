#include "diffy/ssa.hpp"

#include "diffy/simplify.hpp"

namespace diffy {

std::string version_name(const std::string& name, int k) { return name + "$" + std::to_string(k); }

std::string original_name(const std::string& version) {
  auto pos = version.find('$');
  return pos == std::string::npos ? version : version.substr(0, pos);
}

namespace {

class Renamer {
 public:
  Renamer(const Program& p, SsaProgram& out) : src_(p), out_(out) {
    for (auto& v : p.scalars)
      if (!p.counters.count(v)) cur_[v] = v;
    for (auto& [a, d] : p.arrays) cur_[a] = a;
    for (auto& [v, n] : cur_) out_.originals.insert(v);
  }

  StmtP run() {
    std::vector<StmtP> out;
    for (auto& s : items(src_.body)) {
      switch (s->kind) {
        case SKind::Assign: {
          Term e = rename_reads(s->rhs);
          out.push_back(assign(fresh(s->name), e));
          break;
        }
        case SKind::Store: {
          std::vector<Term> idx;
          for (auto& i : s->idx) idx.push_back(rename_reads(i));
          Term t = store(current_term(s->name), idx, rename_reads(s->rhs));
          out.push_back(array_def(fresh(s->name), t));
          break;
        }
        case SKind::ArrayDef: {
          Term t = rename_reads(s->rhs);
          out.push_back(array_def(fresh(s->name), t));
          break;
        }
        case SKind::If: {
          if (has_loop(s)) throw SsaError("conditional containing a loop at top level is not supported");
          std::map<std::string, Term> st;
          for (auto& [v, n] : cur_) st[v] = current_term(v);
          auto before = st;
          exec(s, st);
          for (auto& [v, t] : st) {
            if (same(t, before[v])) continue;
            bool arr = src_.arrays.count(v) > 0;
            Term val = arr ? t : simplify(t);
            out.push_back(arr ? array_def(fresh(v), val) : assign(fresh(v), val));
          }
          break;
        }
        case SKind::For: {
          std::set<std::string> w;
          for (auto& v : written_vars(s))
            if (!src_.counters.count(v)) w.insert(v);
          std::map<std::string, Term> m;
          for (auto& [v, n] : cur_) m[v] = current_term(v);
          for (auto& v : w) {
            Term prev = current_term(v);
            std::string nv = fresh(v);
            out.push_back(src_.arrays.count(v) ? array_def(nv, prev) : assign(nv, prev));
            m[v] = current_term(v);
          }
          out.push_back(rename_loop(s, m));
          break;
        }
        case SKind::Seq: break;
      }
    }
    return seq(out);
  }

  const std::map<std::string, std::string>& current() const { return cur_; }

 private:
  const Program& src_;
  SsaProgram& out_;
  std::map<std::string, std::string> cur_;
  std::map<std::string, int> next_;

  Term term_for(const std::string& orig, const std::string& version) const {
    auto it = src_.arrays.find(orig);
    if (it != src_.arrays.end()) return avar(version, it->second);
    return var(version);
  }
  Term current_term(const std::string& v) const { return term_for(v, cur_.at(v)); }

  std::string fresh(const std::string& v) {
    std::string nv = version_name(v, ++next_[v]);
    cur_[v] = nv;
    out_.versions[v].push_back(nv);
    auto it = src_.arrays.find(v);
    if (it != src_.arrays.end())
      out_.program.arrays[nv] = it->second;
    else
      out_.program.scalars.insert(nv);
    return nv;
  }

  Term rename_reads(const Term& t) const {
    std::map<std::string, Term> m;
    for (auto& [v, n] : cur_) m[v] = current_term(v);
    return subst(t, m);
  }

  // Loop-free symbolic execution over terms for merging a conditional.
  void exec(const StmtP& s, std::map<std::string, Term>& st) const {
    switch (s->kind) {
      case SKind::Seq:
        for (auto& x : s->body) exec(x, st);
        return;
      case SKind::Assign: st[s->name] = subst(s->rhs, st); return;
      case SKind::Store: {
        std::vector<Term> idx;
        for (auto& i : s->idx) idx.push_back(subst(i, st));
        st[s->name] = store(st.at(s->name), idx, subst(s->rhs, st));
        return;
      }
      case SKind::ArrayDef: st[s->name] = subst(s->rhs, st); return;
      case SKind::If: {
        Term c = simplify(subst(s->rhs, st));
        auto other = st;
        exec(s->body[0], st);
        exec(s->body[1], other);
        for (auto& [v, t] : st)
          if (!same(t, other[v])) t = ite(c, t, other[v]);
        return;
      }
      case SKind::For: throw SsaError("unexpected loop");
    }
  }

  StmtP rename_loop(const StmtP& s, const std::map<std::string, Term>& m) const {
    auto target = [&](const std::string& v) {
      auto it = m.find(v);
      return it == m.end() ? v : it->second->name;
    };
    auto ex = [&](const Term& t) { return subst(t, m); };
    switch (s->kind) {
      case SKind::Seq: {
        std::vector<StmtP> xs;
        for (auto& x : s->body) xs.push_back(rename_loop(x, m));
        return seq(xs);
      }
      case SKind::Assign: return assign(target(s->name), ex(s->rhs));
      case SKind::Store: {
        std::vector<Term> idx;
        for (auto& i : s->idx) idx.push_back(ex(i));
        return store_stmt(target(s->name), idx, ex(s->rhs));
      }
      case SKind::ArrayDef: return array_def(target(s->name), ex(s->rhs));
      case SKind::If:
        return if_stmt(ex(s->rhs), rename_loop(s->body[0], m), rename_loop(s->body[1], m));
      case SKind::For: return for_stmt(s->name, ex(s->rhs), rename_loop(s->body[0], m));
    }
    return s;
  }
};

}  // namespace

SsaProgram ssa_rename(const Program& p, const Spec& s) {
  SsaProgram sp;
  sp.program.scalars = p.scalars;
  sp.program.counters = p.counters;
  sp.program.arrays = p.arrays;
  sp.program.unsupported = p.unsupported;
  Renamer r(p, sp);
  StmtP body = r.run();
  sp.program.body = body;
  for (auto& [v, n] : r.current()) sp.final_version[v] = n;
  sp.spec.pre = s.pre;
  sp.spec.post = to_final_versions(sp, s.post);
  return sp;
}

Term to_final_versions(const SsaProgram& sp, const Term& f) {
  std::map<std::string, Term> m;
  for (auto& [v, n] : sp.final_version) m[v] = var_term(sp.program, n);
  return subst(f, m);
}

}  // namespace diffy
