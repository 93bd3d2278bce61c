#include "diffy/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "diffy/simplify.hpp"

extern char** environ;

namespace diffy {

SolverStats& solver_stats() {
  thread_local SolverStats s;
  return s;
}

std::string resolve_solver_path(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* e = std::getenv("DIFFY_SOLVER"); e && *e) return e;
  return "z3";
}

// ---------------------------------------------------------------------------
// Emission

namespace {

std::string quote(const std::string& n) { return "|" + n + "|"; }

std::string sort_str(Sort s, int arity) {
  if (s == Sort::Int) return "Int";
  if (s == Sort::Bool) return "Bool";
  std::string out = "(Array";
  for (int i = 0; i < arity; ++i) out += " Int";
  return out + " Int)";
}

void emit(std::ostream& os, const Term& t) {
  switch (t->kind) {
    case Kind::Const:
      if (t->value < 0)
        os << "(- " << (t->value == INT64_MIN ? std::string("9223372036854775808")
                                               : std::to_string(-t->value))
           << ")";
      else
        os << t->value;
      return;
    case Kind::BoolConst: os << (t->value ? "true" : "false"); return;
    case Kind::Var: os << quote(t->name); return;
    case Kind::Add:
    case Kind::Mul:
      os << (t->kind == Kind::Add ? "(+" : "(*");
      for (auto& k : t->kids) {
        os << ' ';
        emit(os, k);
      }
      os << ')';
      return;
    case Kind::Div:
    case Kind::Mod:
      os << (t->kind == Kind::Div ? "(div " : "(mod ");
      emit(os, t->kids[0]);
      os << ' ';
      emit(os, t->kids[1]);
      os << ')';
      return;
    case Kind::Select:
    case Kind::Store:
      os << (t->kind == Kind::Select ? "(select" : "(store");
      for (auto& k : t->kids) {
        os << ' ';
        emit(os, k);
      }
      os << ')';
      return;
    case Kind::Lambda:
      os << "(lambda (";
      for (std::size_t i = 0; i < t->params.size(); ++i)
        os << (i ? " " : "") << "(" << quote(t->params[i]) << " Int)";
      os << ") ";
      emit(os, t->kids[0]);
      os << ')';
      return;
    case Kind::Ite:
      os << "(ite ";
      emit(os, t->kids[0]);
      os << ' ';
      emit(os, t->kids[1]);
      os << ' ';
      emit(os, t->kids[2]);
      os << ')';
      return;
    case Kind::Cmp: {
      const char* op = "=";
      switch (t->rel) {
        case Rel::Lt: op = "<"; break;
        case Rel::Le: op = "<="; break;
        case Rel::Gt: op = ">"; break;
        case Rel::Ge: op = ">="; break;
        case Rel::Eq:
        case Rel::Ne: op = "="; break;
      }
      if (t->rel == Rel::Ne) os << "(not ";
      os << '(' << op << ' ';
      emit(os, t->kids[0]);
      os << ' ';
      emit(os, t->kids[1]);
      os << ')';
      if (t->rel == Rel::Ne) os << ')';
      return;
    }
    case Kind::Not:
      os << "(not ";
      emit(os, t->kids[0]);
      os << ')';
      return;
    case Kind::And:
    case Kind::Or:
      os << (t->kind == Kind::And ? "(and" : "(or");
      for (auto& k : t->kids) {
        os << ' ';
        emit(os, k);
      }
      os << ')';
      return;
    case Kind::Implies:
      os << "(=> ";
      emit(os, t->kids[0]);
      os << ' ';
      emit(os, t->kids[1]);
      os << ')';
      return;
    case Kind::Forall:
    case Kind::Exists: {
      std::string v = quote(t->name);
      bool fa = t->kind == Kind::Forall;
      os << (fa ? "(forall ((" : "(exists ((") << v << " Int)) (" << (fa ? "=> " : "and ")
         << "(and (<= ";
      emit(os, t->kids[0]);
      os << ' ' << v << ") (< " << v << ' ';
      emit(os, t->kids[1]);
      os << ")) ";
      emit(os, t->kids[2]);
      os << "))";
      return;
    }
  }
}

void collect_decls(const Term& t, std::set<std::string>& bound,
                   std::map<std::string, std::pair<Sort, int>>& out) {
  switch (t->kind) {
    case Kind::Var:
      if (!bound.count(t->name)) {
        auto it = out.find(t->name);
        if (it != out.end() && (it->second.first != t->sort || it->second.second != t->arity))
          throw SolverError("symbol '" + t->name + "' used with two sorts");
        out[t->name] = {t->sort, t->arity};
      }
      return;
    case Kind::Forall:
    case Kind::Exists: {
      collect_decls(t->kids[0], bound, out);
      collect_decls(t->kids[1], bound, out);
      bool fresh = bound.insert(t->name).second;
      collect_decls(t->kids[2], bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case Kind::Lambda: {
      std::vector<std::string> added;
      for (auto& p : t->params)
        if (bound.insert(p).second) added.push_back(p);
      collect_decls(t->kids[0], bound, out);
      for (auto& p : added) bound.erase(p);
      return;
    }
    default:
      for (auto& k : t->kids) collect_decls(k, bound, out);
  }
}

bool has_quant(const Term& t) {
  if (is_quant(t) || t->kind == Kind::Lambda) return true;
  for (auto& k : t->kids)
    if (has_quant(k)) return true;
  return false;
}

}  // namespace

std::string smt_term(const Term& t) {
  std::ostringstream os;
  emit(os, t);
  return os.str();
}

bool is_nonlinear(const Term& t) {
  if (t->kind == Kind::Mul) {
    int nonconst = 0;
    for (auto& k : t->kids)
      if (k->kind != Kind::Const) ++nonconst;
    if (nonconst > 1) return true;
  }
  if ((t->kind == Kind::Div || t->kind == Kind::Mod) && t->kids[1]->kind != Kind::Const) return true;
  for (auto& k : t->kids)
    if (is_nonlinear(k)) return true;
  return false;
}

std::string emit_smtlib(const std::vector<Term>& assertions, const std::vector<Term>& values) {
  std::map<std::string, std::pair<Sort, int>> decls;
  bool nonlin = false, quant = false;
  for (auto& a : assertions) {
    std::set<std::string> bound;
    collect_decls(a, bound, decls);
    nonlin = nonlin || is_nonlinear(a);
    quant = quant || has_quant(a);
  }
  bool arrays = false;
  for (auto& [n, s] : decls) arrays = arrays || s.first == Sort::Array;
  std::ostringstream os;
  std::string logic = std::string(quant ? "" : "QF_") + (arrays || quant ? "AUF" : "UF") +
                      (nonlin ? "NIA" : "LIA");
  if (!quant && !arrays) logic = nonlin ? "QF_NIA" : "QF_LIA";
  os << "(set-logic " << logic << ")\n";
  for (auto& [n, s] : decls)
    os << "(declare-fun " << quote(n) << " () " << sort_str(s.first, s.second) << ")\n";
  for (auto& a : assertions) {
    os << "(assert ";
    emit(os, a);
    os << ")\n";
  }
  os << "(check-sat)\n";
  std::vector<Term> vs;
  for (auto& v : values) {
    std::map<std::string, std::pair<Sort, int>> d;
    std::set<std::string> b;
    collect_decls(v, b, d);
    bool ok = true;
    for (auto& [n, s] : d) ok = ok && decls.count(n);
    if (ok) vs.push_back(v);
  }
  if (!vs.empty()) {
    os << "(get-value (";
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (i) os << ' ';
      emit(os, vs[i]);
    }
    os << "))\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Process interface

namespace {

struct Sexp {
  bool atom = true;
  std::string text;
  std::vector<Sexp> kids;
};

struct SexpReader {
  const std::string& s;
  std::size_t i = 0;
  void ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool done() {
    ws();
    return i >= s.size();
  }
  Sexp read() {
    ws();
    if (i >= s.size()) throw SolverError("unexpected end of solver output");
    Sexp e;
    if (s[i] == '(') {
      e.atom = false;
      ++i;
      for (;;) {
        ws();
        if (i >= s.size()) throw SolverError("unbalanced solver output");
        if (s[i] == ')') {
          ++i;
          break;
        }
        e.kids.push_back(read());
      }
      return e;
    }
    if (s[i] == '|') {
      std::size_t j = s.find('|', i + 1);
      if (j == std::string::npos) throw SolverError("unterminated symbol in solver output");
      e.text = s.substr(i, j - i + 1);
      i = j + 1;
      return e;
    }
    if (s[i] == '"') {
      std::size_t j = s.find('"', i + 1);
      if (j == std::string::npos) j = s.size() - 1;
      e.text = s.substr(i, j - i + 1);
      i = j + 1;
      return e;
    }
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(' &&
           s[j] != ')')
      ++j;
    e.text = s.substr(i, j - i);
    i = j;
    return e;
  }
};

std::optional<std::int64_t> sexp_int(const Sexp& e) {
  try {
    if (e.atom) return std::stoll(e.text);
    if (e.kids.size() == 2 && e.kids[0].atom && e.kids[0].text == "-") {
      auto v = sexp_int(e.kids[1]);
      if (v) return -*v;
    }
  } catch (...) {
  }
  return std::nullopt;
}

std::string run_process(const std::string& path, const std::string& file, int timeout_ms,
                        bool* timed_out) {
  int fds[2];
  if (pipe(fds) != 0) throw SolverError("pipe failed");
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, fds[1], 1);
  posix_spawn_file_actions_adddup2(&fa, fds[1], 2);
  posix_spawn_file_actions_addclose(&fa, fds[0]);
  std::string targ = "-T:" + std::to_string(timeout_ms / 1000 + 2);
  std::vector<char*> argv{const_cast<char*>(path.c_str()), const_cast<char*>("-smt2"),
                          const_cast<char*>(targ.c_str()), const_cast<char*>(file.c_str()),
                          nullptr};
  pid_t pid;
  int rc = posix_spawnp(&pid, path.c_str(), &fa, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    throw SolverError("cannot start solver '" + path + "': " + std::strerror(rc));
  }
  std::string out;
  auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms + 1500);
  char buf[4096];
  *timed_out = false;
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) {
      *timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    pollfd p{fds[0], POLLIN, 0};
    int pr = poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 200)));
    if (pr < 0 && errno != EINTR) break;
    if (pr <= 0) continue;
    ssize_t n = read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  return out;
}

}  // namespace

SatResult solve(const std::string& script, const SolverConfig& cfg) {
  SatResult res;
  int timeout = cfg.timeout_ms;
  if (cfg.deadline) {
    auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(*cfg.deadline - Clock::now()).count();
    if (left <= 50) {
      res.reason = "time budget exhausted";
      return res;
    }
    timeout = static_cast<int>(std::min<long long>(timeout, left));
  }
  char tmpl[] = "/tmp/diffy-XXXXXX.smt2";
  int fd = mkstemps(tmpl, 5);
  if (fd < 0) throw SolverError("cannot create temporary file");
  std::string text = "(set-option :timeout " + std::to_string(timeout) + ")\n" + script;
  for (std::size_t off = 0; off < text.size();) {
    ssize_t n = write(fd, text.data() + off, text.size() - off);
    if (n <= 0) {
      close(fd);
      unlink(tmpl);
      throw SolverError("cannot write solver script");
    }
    off += static_cast<std::size_t>(n);
  }
  close(fd);
  auto t0 = Clock::now();
  bool timed_out = false;
  std::string out;
  try {
    out = run_process(resolve_solver_path(cfg.path), tmpl, timeout, &timed_out);
  } catch (...) {
    unlink(tmpl);
    throw;
  }
  unlink(tmpl);
  auto& st = solver_stats();
  ++st.queries;
  st.millis += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  if (timed_out) {
    res.reason = "solver timeout";
    return res;
  }
  SexpReader rd{out};
  std::vector<Sexp> items;
  try {
    while (!rd.done()) items.push_back(rd.read());
  } catch (const SolverError&) {
    res.reason = "unparseable solver output";
    return res;
  }
  std::size_t k = 0;
  for (; k < items.size(); ++k) {
    if (!items[k].atom) {
      if (!items[k].kids.empty() && items[k].kids[0].text == "error") {
        std::string msg = items[k].kids.size() > 1 ? items[k].kids[1].text : "";
        if (msg.find("model is not available") != std::string::npos) continue;
        throw SolverError("solver error: " + msg);
      }
      continue;
    }
    if (items[k].text == "sat") res.status = SatStatus::Sat;
    else if (items[k].text == "unsat") res.status = SatStatus::Unsat;
    else if (items[k].text == "unknown" || items[k].text == "timeout") res.status = SatStatus::Unknown;
    else continue;
    break;
  }
  if (k == items.size()) {
    res.reason = out.empty() ? "solver produced no output" : "no check-sat answer";
    return res;
  }
  if (res.status == SatStatus::Unknown) res.reason = "solver returned unknown";
  if (res.status == SatStatus::Sat) {
    for (std::size_t j = k + 1; j < items.size(); ++j) {
      if (items[j].atom) continue;
      for (auto& pair : items[j].kids) {
        if (pair.atom || pair.kids.size() != 2) continue;
        std::ostringstream key;
        std::function<void(const Sexp&)> pr = [&](const Sexp& e) {
          if (e.atom) {
            key << e.text;
            return;
          }
          key << '(';
          for (std::size_t q = 0; q < e.kids.size(); ++q) {
            if (q) key << ' ';
            pr(e.kids[q]);
          }
          key << ')';
        };
        pr(pair.kids[0]);
        if (auto v = sexp_int(pair.kids[1])) res.values[key.str()] = *v;
      }
      break;
    }
  }
  return res;
}

SatResult check_sat(const std::vector<Term>& fs, const SolverConfig& cfg,
                    const std::vector<Term>& values) {
  // N >= 1 is assumed by the simplifier, so every query carries it too
  std::vector<Term> all = fs;
  for (auto& f : fs)
    if (occurs("N", f)) {
      all.push_back(ge(param_n(), cst(1)));
      break;
    }
  return solve(emit_smtlib(all, values), cfg);
}

// ---------------------------------------------------------------------------
// Instantiation fallback

namespace {

Rel negate_rel(Rel r) {
  switch (r) {
    case Rel::Lt: return Rel::Ge;
    case Rel::Le: return Rel::Gt;
    case Rel::Gt: return Rel::Le;
    case Rel::Ge: return Rel::Lt;
    case Rel::Eq: return Rel::Ne;
    case Rel::Ne: return Rel::Eq;
  }
  return r;
}

Term nnf(const Term& t, bool pos) {
  switch (t->kind) {
    case Kind::Not: return nnf(t->kids[0], !pos);
    case Kind::And:
    case Kind::Or: {
      std::vector<Term> ks;
      for (auto& k : t->kids) ks.push_back(nnf(k, pos));
      bool conj = (t->kind == Kind::And) == pos;
      return conj ? and_t(ks) : or_t(ks);
    }
    case Kind::Implies:
      if (pos) return or_t(nnf(t->kids[0], false), nnf(t->kids[1], true));
      return and_t(nnf(t->kids[0], true), nnf(t->kids[1], false));
    case Kind::Forall:
    case Kind::Exists: {
      bool fa = (t->kind == Kind::Forall) == pos;
      Term body = nnf(t->kids[2], pos);
      return fa ? forall_t(t->name, t->kids[0], t->kids[1], body)
                : exists_t(t->name, t->kids[0], t->kids[1], body);
    }
    case Kind::Cmp:
      return pos ? t : cmp(negate_rel(t->rel), t->kids[0], t->kids[1]);
    case Kind::BoolConst: return blit((t->value != 0) == pos);
    default: return pos ? t : not_t(t);
  }
}

void ground_indices(const Term& t, const std::set<std::string>& bound, std::vector<Term>& out) {
  if (t->kind == Kind::Select) {
    for (std::size_t k = 1; k < t->kids.size(); ++k) {
      bool closed = true;
      for (auto& v : free_vars(t->kids[k])) closed = closed && !bound.count(v);
      if (closed) out.push_back(t->kids[k]);
    }
  }
  if (is_quant(t)) {
    std::set<std::string> b = bound;
    b.insert(t->name);
    for (auto& k : t->kids) ground_indices(k, b, out);
    return;
  }
  if (t->kind == Kind::Lambda) {
    std::set<std::string> b = bound;
    for (auto& p : t->params) b.insert(p);
    ground_indices(t->kids[0], b, out);
    return;
  }
  for (auto& k : t->kids) ground_indices(k, bound, out);
}

}  // namespace

std::vector<Term> instantiate(const std::vector<Term>& fs, int rounds, bool* had_universal) {
  struct Univ {
    std::string v;
    Term lo, hi, body;
  };
  std::vector<Term> ground;
  std::vector<Univ> univs;
  bool mentions_n = false;
  std::function<void(const Term&)> add = [&](const Term& f) {
    if (f->kind == Kind::And) {
      for (auto& k : f->kids) add(k);
      return;
    }
    if (f->kind == Kind::Exists) {
      std::string sk = fresh_name("sk");
      Term s = var(sk);
      ground.push_back(in_range(s, f->kids[0], f->kids[1]));
      add(simplify(subst1(f->kids[2], f->name, s)));
      return;
    }
    if (f->kind == Kind::Forall) {
      univs.push_back({f->name, f->kids[0], f->kids[1], f->kids[2]});
      return;
    }
    ground.push_back(f);
  };
  for (auto& f : fs) {
    mentions_n = mentions_n || occurs("N", f);
    add(nnf(f, true));
  }
  if (had_universal) *had_universal = !univs.empty();
  std::vector<Term> done_inst;
  std::size_t univ_done = 0;
  std::set<std::pair<std::size_t, std::size_t>> tried;
  for (int r = 0; r < rounds && !univs.empty(); ++r) {
    std::vector<Term> cands{cst(0)};
    if (mentions_n) {
      cands.push_back(sub(param_n(), cst(1)));
      cands.push_back(sub(param_n(), cst(2)));
    }
    std::vector<Term> idx;
    for (auto& g : ground) ground_indices(g, {}, idx);
    for (auto& u : univs) {
      ground_indices(u.body, {u.v}, idx);
      idx.push_back(u.lo);
      idx.push_back(sub(u.hi, cst(1)));
    }
    for (auto& i : idx) cands.push_back(i);
    std::vector<Term> uniq;
    for (auto& c : cands) {
      Term s = simplify(c);
      bool closed = true;
      for (auto& u : univs)
        if (occurs(u.v, s)) closed = false;
      if (!closed) continue;
      bool dup = false;
      for (auto& q : uniq) dup = dup || same(q, s);
      if (!dup) uniq.push_back(s);
      if (uniq.size() >= 40) break;
    }
    std::size_t nu = univs.size();
    for (std::size_t ui = 0; ui < nu; ++ui) {
      for (std::size_t ci = 0; ci < uniq.size(); ++ci) {
        if (!tried.insert({ui, compare(uniq[ci], cst(0)) == 0 ? 0 : uniq[ci]->hash}).second)
          continue;
        const Univ u = univs[ui];
        Term inst = simplify(implies(in_range(uniq[ci], u.lo, u.hi),
                                     subst1(u.body, u.v, uniq[ci])));
        if (is_true(inst)) continue;
        add(nnf(inst, true));
        if (ground.size() + univs.size() > 6000) break;
      }
    }
    univ_done = nu;
  }
  (void)univ_done;
  return ground;
}

SolverVerdict check_valid(const Term& hyp, const Term& goal, const SolverConfig& cfg,
                          const std::vector<std::string>& model_vars) {
  SolverVerdict v;
  Term h = simplify(hyp);
  Term g = simplify(goal);
  if (is_true(g) || is_false(h) || same(h, g)) {
    v.status = Validity::Valid;
    return v;
  }
  std::vector<Term> vals;
  for (auto& m : model_vars) vals.push_back(var(m));
  std::vector<Term> fs{h, not_t(g)};
  bool quant = has_quant(h) || has_quant(g);
  SolverConfig first = cfg;
  if (quant) first.timeout_ms = std::max(1000, cfg.timeout_ms / 2);
  SatResult r = check_sat(fs, first, vals);
  auto fill_model = [&](const SatResult& s) {
    for (auto& m : model_vars) {
      auto it = s.values.find("|" + m + "|");
      if (it != s.values.end()) v.model[m] = it->second;
    }
  };
  if (r.status == SatStatus::Unsat) {
    v.status = Validity::Valid;
    return v;
  }
  if (r.status == SatStatus::Sat) {
    v.status = Validity::Invalid;
    fill_model(r);
    return v;
  }
  if (!quant) {
    v.reason = r.reason;
    return v;
  }
  bool had_univ = false;
  std::vector<Term> inst = instantiate(fs, 2, &had_univ);
  SatResult r2 = check_sat(inst, cfg, vals);
  if (r2.status == SatStatus::Unsat) {
    v.status = Validity::Valid;
    return v;
  }
  if (r2.status == SatStatus::Sat && !had_univ) {
    v.status = Validity::Invalid;
    fill_model(r2);
    return v;
  }
  v.reason = r.reason.empty() ? "solver incomplete on quantified query" : r.reason;
  return v;
}

}  // namespace diffy
