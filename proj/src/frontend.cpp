#include "diffy/frontend.hpp"

#include <cctype>
#include <regex>
#include <sstream>

#include "diffy/simplify.hpp"

namespace diffy {

ParseError::ParseError(Kind k, int l, int c, const std::string& msg)
    : std::runtime_error((k == Kind::Syntax ? "syntax error" : "grammar violation") +
                         std::string(" at ") + std::to_string(l) + ":" + std::to_string(c) +
                         ": " + msg),
      kind(k),
      line(l),
      col(c) {}

namespace {

// ---------------------------------------------------------------------------
// Lexing

struct Token {
  enum Type { Ident, Int, Sym, End } type = End;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

std::string normalize_symbols(std::string s) {
  static const std::vector<std::pair<std::string, std::string>> reps = {
      {"\\(\\exists\\)", " exists "}, {"\\(\\forall\\)", " forall "}, {"\\(\\in\\)", " in "},
      {"\\{", "{"}, {"\\}", "}"}, {"\\%", "%"}, {"∀", " forall "}, {"∃", " exists "},
      {"∈", " in "}, {"≤", "<="}, {"≥", ">="}, {"≠", "!="}, {"∧", "&&"},
      {"∨", "||"}, {"¬", "!"}, {"⇒", "==>"}, {"→", "==>"}};
  for (auto& [from, to] : reps) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, from.size(), to);
      pos += to.size();
    }
  }
  return s;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '#' ||
         c == '@' || c == '\'';
}

std::vector<Token> lex(const std::string& text, int first_line) {
  static const char* syms[] = {"==>", "::", "<=", ">=", "==", "!=", "&&", "||", "++", "--",
                               "+=",  "-=", "*=", "+",  "-",  "*",  "/",  "%",  "<",  ">",
                               "=",   "!",  "(",  ")",  "[",  "]",  "{",  "}",  ";",  ",",
                               "?",   ":",  "."};
  std::vector<Token> out;
  int line = first_line, col = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      ++col;
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      t.type = Token::Ident;
      t.text = text.substr(i, j - i);
      col += static_cast<int>(j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      t.type = Token::Int;
      t.text = text.substr(i, j - i);
      try {
        t.value = std::stoll(t.text);
      } catch (...) {
        throw ParseError(ParseError::Kind::Syntax, line, col, "integer literal out of range");
      }
      col += static_cast<int>(j - i);
      i = j;
    } else {
      bool found = false;
      for (const char* s : syms) {
        std::size_t n = std::char_traits<char>::length(s);
        if (text.compare(i, n, s) == 0) {
          t.type = Token::Sym;
          t.text = s;
          i += n;
          col += static_cast<int>(n);
          found = true;
          break;
        }
      }
      if (!found)
        throw ParseError(ParseError::Kind::Syntax, line, col,
                         std::string("unexpected character '") + c + "'");
    }
    out.push_back(t);
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

struct Annotation {
  bool is_assume;
  std::string text;
  int line;
};

// Split source into code (comments blanked, line numbers kept) and annotations.
std::string split_source(const std::string& src, std::vector<Annotation>& annots) {
  std::istringstream in(normalize_symbols(src));
  std::string line, code;
  static const std::regex listing_number(R"(^\s*\d+\.(\s|$))");
  int lineno = 0;
  bool in_block = false;
  Annotation* open = nullptr;
  int depth = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::smatch m;
    if (std::regex_search(line, m, listing_number)) line = line.substr(m.length(0));
    std::string code_part, comment;
    std::size_t i = 0;
    while (i < line.size()) {
      if (in_block) {
        std::size_t e = line.find("*/", i);
        if (e == std::string::npos) {
          i = line.size();
        } else {
          in_block = false;
          i = e + 2;
        }
        continue;
      }
      if (line.compare(i, 2, "/*") == 0) {
        in_block = true;
        i += 2;
        continue;
      }
      if (line.compare(i, 2, "//") == 0) {
        comment = line.substr(i + 2);
        break;
      }
      code_part += line[i++];
    }
    code += code_part + "\n";
    if (comment.empty() && !open) continue;
    std::string body = comment;
    if (!open) {
      std::size_t s = body.find_first_not_of(" \t");
      if (s == std::string::npos) continue;
      body = body.substr(s);
      bool assume = body.rfind("assume", 0) == 0;
      bool assrt = body.rfind("assert", 0) == 0;
      if (!assume && !assrt) continue;
      body = body.substr(6);
      std::size_t p = body.find_first_not_of(" \t");
      if (p == std::string::npos || body[p] != '(') continue;
      annots.push_back({assume, "", lineno});
      open = &annots.back();
      depth = 0;
    }
    for (char c : body) {
      open->text += c;
      // half-open ranges like [0,N) pair a bracket with a parenthesis
      if (c == '(' || c == '[') ++depth;
      if ((c == ')' || c == ']') && --depth == 0) {
        open = nullptr;
        break;
      }
    }
    if (open) open->text += ' ';
  }
  if (open)
    throw ParseError(ParseError::Kind::Syntax, open->line, 1, "unterminated annotation");
  return code;
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
 public:
  Parser(std::vector<Token> toks, Program& prog, bool annot)
      : toks_(std::move(toks)), prog_(prog), annot_(annot) {}

  std::vector<std::string> notes;

  StmtP parse_toplevel() {
    std::vector<StmtP> out;
    while (!at_end()) out.push_back(parse_stmt(true));
    return seq(out);
  }

  Term parse_whole_formula() {
    Term t = to_bool(parse_expr());
    if (!at_end()) fail("trailing input in formula");
    return t;
  }

  bool at_end() const { return toks_[pos_].type == Token::End; }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program& prog_;
  bool annot_;
  std::vector<std::pair<std::string, std::string>> counter_scope_;  // source name -> internal
  std::vector<std::string> bound_;
  std::set<std::string> scalar_like_;

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool is_sym(const char* s, std::size_t k = 0) const {
    return peek(k).type == Token::Sym && peek(k).text == s;
  }
  bool is_kw(const char* s, std::size_t k = 0) const {
    return peek(k).type == Token::Ident && peek(k).text == s;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ParseError::Kind::Syntax, peek().line, peek().col, msg);
  }
  [[noreturn]] void grammar(const std::string& msg) const {
    throw ParseError(ParseError::Kind::Grammar, peek().line, peek().col, msg);
  }
  void expect(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "' but found '" + peek().text + "'");
    ++pos_;
  }
  bool accept(const char* s) {
    if (is_sym(s)) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string ident() {
    if (peek().type != Token::Ident) fail("expected identifier but found '" + peek().text + "'");
    return toks_[pos_++].text;
  }

  static bool is_type_kw(const std::string& s) {
    return s == "int" || s == "float" || s == "double" || s == "void" || s == "unsigned" ||
           s == "long" || s == "bool" || s == "char" || s == "short" || s == "signed";
  }

  const std::string* counter_in_scope(const std::string& n) const {
    for (auto it = counter_scope_.rbegin(); it != counter_scope_.rend(); ++it)
      if (it->first == n) return &it->second;
    return nullptr;
  }

  Term to_bool(const Term& t) const {
    if (t->sort == Sort::Bool) return t;
    if (t->sort == Sort::Int) return ne(t, cst(0));
    fail("array used as a condition");
  }
  Term to_int(const Term& t) const {
    if (t->sort == Sort::Int) return t;
    if (t->sort == Sort::Bool) return ite(t, cst(1), cst(0));
    fail("array used as a number");
  }

  // -------------------------------------------------------------------------
  // Statements

  StmtP parse_stmt(bool toplevel = false) {
    if (accept("{")) {
      std::vector<StmtP> xs;
      while (!accept("}")) {
        if (at_end()) fail("unterminated block");
        xs.push_back(parse_stmt());
      }
      return seq(xs);
    }
    if (accept(";")) return seq({});
    if (peek().type == Token::Ident) {
      const std::string& w = peek().text;
      if (w == "for") return parse_for();
      if (w == "if") return parse_if();
      if (w == "while" || w == "do" || w == "goto")
        grammar("'" + w + "' loops are outside the supported grammar");
      if (w == "return") {
        while (!accept(";")) {
          if (at_end()) fail("expected ';'");
          ++pos_;
        }
        return seq({});
      }
      if (is_type_kw(w)) return parse_decl(toplevel);
    }
    return parse_simple(true);
  }

  StmtP parse_decl(bool toplevel) {
    bool is_float = false;
    while (peek().type == Token::Ident && is_type_kw(peek().text)) {
      if (peek().text == "float" || peek().text == "double") is_float = true;
      ++pos_;
    }
    if (is_float) prog_.unsupported.push_back("floating-point declaration");
    std::string name = ident();
    if (is_sym("(")) {
      if (!toplevel) fail("nested function definitions are not supported");
      ++pos_;
      parse_params();
      if (is_sym("{")) return parse_stmt();
      expect(";");
      return seq({});
    }
    std::vector<StmtP> out;
    for (;;) {
      int dims = 0;
      while (accept("[")) {
        int d = 1;
        while (d > 0) {
          if (at_end()) fail("unterminated array bound");
          if (is_sym("[")) ++d;
          if (is_sym("]")) --d;
          if (d > 0) ++pos_;
        }
        expect("]");
        ++dims;
      }
      if (dims > 0) {
        declare_array(name, dims);
      } else {
        prog_.scalars.insert(name);
      }
      if (accept("=")) {
        scalar_like_.insert(name);
        Term e = parse_expr();
        if (dims > 0) fail("array initializers are not supported");
        out.push_back(assign(name, to_int(e)));
      }
      if (accept(";")) break;
      expect(",");
      name = ident();
    }
    return seq(out);
  }

  void parse_params() {
    // Loose parameter list: record array parameters, ignore the rest.
    while (!accept(")")) {
      if (at_end()) fail("unterminated parameter list");
      if (peek().type == Token::Ident && !is_type_kw(peek().text) && is_sym("[", 1)) {
        std::string n = ident();
        int dims = 0;
        while (accept("[")) {
          while (!accept("]")) ++pos_;
          ++dims;
        }
        declare_array(n, dims);
        continue;
      }
      ++pos_;
    }
  }

  void declare_array(const std::string& n, int dims) {
    auto it = prog_.arrays.find(n);
    if (it != prog_.arrays.end() && it->second != dims)
      fail("array '" + n + "' used with inconsistent dimensions");
    prog_.arrays[n] = dims;
  }

  StmtP parse_if() {
    ++pos_;
    expect("(");
    Term c = to_bool(parse_expr());
    expect(")");
    StmtP t = parse_stmt();
    StmtP e = seq({});
    if (is_kw("else")) {
      ++pos_;
      e = parse_stmt();
    }
    return if_stmt(c, t, e);
  }

  StmtP parse_for() {
    ++pos_;
    expect("(");
    if (is_kw("int")) ++pos_;
    std::string src = ident();
    Term ub;
    if (accept("<")) {
      ub = to_int(parse_expr());
      expect(")");
    } else {
      expect("=");
      Term init = simplify(to_int(parse_expr()));
      if (!is_const(init) || init->value != 0)
        grammar("loop counter '" + src + "' must start at 0");
      expect(";");
      if (ident() != src) grammar("loop condition must test the counter '" + src + "'");
      if (is_sym("<=")) grammar("loop condition must have the form counter < bound");
      expect("<");
      ub = to_int(parse_expr());
      expect(";");
      parse_increment(src);
      expect(")");
    }
    std::string internal = src;
    if (prog_.counters.count(src) || scalar_like_.count(src) || counter_in_scope(src)) {
      int k = 2;
      while (prog_.counters.count(src + "$L" + std::to_string(k))) ++k;
      internal = src + "$L" + std::to_string(k);
      notes.push_back("loop counter '" + src + "' reused; renamed to '" + internal + "'");
    }
    prog_.counters.insert(internal);
    prog_.scalars.insert(internal);
    counter_scope_.emplace_back(src, internal);
    StmtP body = parse_stmt();
    counter_scope_.pop_back();
    return for_stmt(internal, ub, body);
  }

  void parse_increment(const std::string& c) {
    auto stride = [&]() { grammar("loop counter '" + c + "' must be incremented by 1"); };
    if (accept("++")) {
      if (ident() != c) stride();
      return;
    }
    if (ident() != c) stride();
    if (accept("++")) return;
    if (accept("+=")) {
      Term e = simplify(to_int(parse_expr()));
      if (!is_const(e) || e->value != 1) stride();
      return;
    }
    if (accept("=")) {
      Term e = simplify(to_int(parse_expr_no_counter(c)));
      if (!same(e, simplify(add(var("%self"), cst(1))))) stride();
      return;
    }
    stride();
  }

  Term parse_expr_no_counter(const std::string& c) {
    counter_scope_.emplace_back(c, "%self");
    Term e = parse_expr();
    counter_scope_.pop_back();
    return e;
  }

  StmtP parse_simple(bool need_semi) {
    bool pre_inc = false, pre_dec = false;
    if (accept("++")) pre_inc = true;
    else if (accept("--")) pre_dec = true;
    int line = peek().line, col = peek().col;
    std::string name = ident();
    if (name == "N")
      throw ParseError(ParseError::Kind::Grammar, line, col, "the parameter N is read-only");
    if (counter_in_scope(name))
      throw ParseError(ParseError::Kind::Grammar, line, col,
                       "loop counter '" + name + "' is assigned in the loop body");
    std::vector<Term> idx;
    while (accept("[")) {
      idx.push_back(to_int(parse_expr()));
      expect("]");
    }
    Term cur;
    if (!idx.empty()) {
      declare_array(name, static_cast<int>(idx.size()));
      cur = select(avar(name, static_cast<int>(idx.size())), idx);
    } else if (prog_.arrays.count(name)) {
      cur = avar(name, prog_.arrays[name]);
    } else {
      prog_.scalars.insert(name);
      scalar_like_.insert(name);
      cur = var(name);
    }
    Term rhs;
    if (pre_inc || pre_dec) {
      rhs = add(cur, cst(pre_inc ? 1 : -1));
    } else if (accept("++")) {
      rhs = add(cur, cst(1));
    } else if (accept("--")) {
      rhs = add(cur, cst(-1));
    } else if (accept("+=")) {
      rhs = add(cur, to_int(parse_expr()));
    } else if (accept("-=")) {
      rhs = sub(cur, to_int(parse_expr()));
    } else if (accept("*=")) {
      rhs = mul(cur, to_int(parse_expr()));
    } else {
      expect("=");
      rhs = parse_expr();
    }
    if (need_semi) expect(";");
    if (cur->sort == Sort::Array) {
      if (rhs->sort != Sort::Array || rhs->arity != cur->arity)
        fail("array '" + name + "' assigned a non-array value");
      return array_def(name, rhs);
    }
    rhs = to_int(rhs);
    if (!idx.empty()) return store_stmt(name, idx, rhs);
    return assign(name, rhs);
  }

  // -------------------------------------------------------------------------
  // Expressions

 public:
  Term parse_expr() { return parse_implies(); }

 private:
  Term parse_implies() {
    Term a = parse_ternary();
    if (accept("==>")) return implies(to_bool(a), to_bool(parse_implies()));
    return a;
  }

  Term parse_ternary() {
    Term c = parse_or();
    if (accept("?")) {
      Term a = parse_expr();
      expect(":");
      Term b = parse_ternary();
      if (a->sort == Sort::Bool || b->sort == Sort::Bool) {
        Term cb = to_bool(c);
        return or_t(and_t(cb, to_bool(a)), and_t(not_t(cb), to_bool(b)));
      }
      if (a->sort != b->sort || a->arity != b->arity) fail("conditional branches differ in type");
      return ite(to_bool(c), a, b);
    }
    return c;
  }

  bool kw_op(const char* s) {
    if (annot_ && is_kw(s)) {
      ++pos_;
      return true;
    }
    return false;
  }

  Term parse_or() {
    Term a = parse_and();
    while (accept("||") || kw_op("or")) a = or_t(to_bool(a), to_bool(parse_and()));
    return a;
  }

  Term parse_and() {
    Term a = parse_eq();
    while (accept("&&") || kw_op("and")) a = and_t(to_bool(a), to_bool(parse_eq()));
    return a;
  }

  Term parse_eq() {
    Term a = parse_rel();
    for (;;) {
      if (accept("==") || (annot_ && accept("="))) {
        a = eq(to_int(a), to_int(parse_rel()));
      } else if (accept("!=")) {
        a = ne(to_int(a), to_int(parse_rel()));
      } else {
        return a;
      }
    }
  }

  Term parse_rel() {
    Term a = parse_add();
    for (;;) {
      Rel r;
      if (accept("<=")) r = Rel::Le;
      else if (accept(">=")) r = Rel::Ge;
      else if (accept("<")) r = Rel::Lt;
      else if (accept(">")) r = Rel::Gt;
      else return a;
      a = cmp(r, to_int(a), to_int(parse_add()));
    }
  }

  Term parse_add() {
    Term a = parse_mul();
    for (;;) {
      if (accept("+")) a = add(to_int(a), to_int(parse_mul()));
      else if (accept("-")) a = sub(to_int(a), to_int(parse_mul()));
      else return a;
    }
  }

  Term parse_mul() {
    Term a = parse_unary();
    for (;;) {
      if (accept("*")) a = mul(to_int(a), to_int(parse_unary()));
      else if (accept("/")) a = div_t(to_int(a), to_int(parse_unary()));
      else if (accept("%")) a = mod_t(to_int(a), to_int(parse_unary()));
      else return a;
    }
  }

  Term parse_unary() {
    if (accept("-")) {
      Term e = to_int(parse_unary());
      if (is_const(e)) return cst(-e->value);
      return neg(e);
    }
    if (accept("+")) return to_int(parse_unary());
    if (accept("!") || kw_op("not")) return not_t(to_bool(parse_unary()));
    return parse_postfix();
  }

  Term parse_postfix() {
    Term t = parse_primary();
    while (is_sym("[") && t->sort == Sort::Array) {
      std::vector<Term> idx;
      for (int k = 0; k < t->arity; ++k) {
        expect("[");
        idx.push_back(to_int(parse_expr()));
        expect("]");
      }
      t = select(t, idx);
    }
    return t;
  }

  Term parse_quant(bool is_forall) {
    std::string v = ident();
    if (!is_kw("in")) fail("expected 'in' after quantified variable");
    ++pos_;
    expect("[");
    Term lo = to_int(parse_expr());
    expect(",");
    Term hi = to_int(parse_expr());
    expect(")");
    if (!(accept("::") || accept(",") || accept(":") || accept(".")))
      fail("expected '::' after quantifier range");
    bound_.push_back(v);
    Term body = to_bool(parse_expr());
    bound_.pop_back();
    return is_forall ? forall_t(v, lo, hi, body) : exists_t(v, lo, hi, body);
  }

  Term parse_primary() {
    const Token& t = peek();
    if (t.type == Token::Int) {
      ++pos_;
      return cst(t.value);
    }
    if (accept("(")) {
      Term e = parse_expr();
      expect(")");
      return e;
    }
    if (t.type != Token::Ident) fail("unexpected '" + t.text + "'");
    std::string name = t.text;
    ++pos_;
    if (name == "true") return tru();
    if (name == "false") return fls();
    if (name == "forall") return parse_quant(true);
    if (name == "exists") return parse_quant(false);
    if (name == "lambda") {
      std::vector<std::string> ps{ident()};
      while (accept(",")) ps.push_back(ident());
      expect("::");
      for (auto& p : ps) bound_.push_back(p);
      Term body = to_int(parse_expr());
      for (std::size_t k = 0; k < ps.size(); ++k) bound_.pop_back();
      return lambda(ps, body);
    }
    if (name == "store" && is_sym("(")) {
      ++pos_;
      std::vector<Term> args{parse_expr()};
      while (accept(",")) args.push_back(parse_expr());
      expect(")");
      if (args.size() < 3 || args[0]->sort != Sort::Array ||
          static_cast<int>(args.size()) != args[0]->arity + 2)
        fail("malformed store(...)");
      std::vector<Term> idx;
      for (std::size_t k = 1; k + 1 < args.size(); ++k) idx.push_back(to_int(args[k]));
      return store(args[0], idx, to_int(args.back()));
    }
    for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
      if (*it == name) return var(name);
    if (name == "N") return param_n();
    if (const std::string* c = counter_in_scope(name)) return var(*c);
    if (is_sym("[")) {
      std::vector<Term> idx;
      while (accept("[")) {
        idx.push_back(to_int(parse_expr()));
        expect("]");
      }
      declare_array(name, static_cast<int>(idx.size()));
      return select(avar(name, static_cast<int>(idx.size())), idx);
    }
    auto ai = prog_.arrays.find(name);
    if (ai != prog_.arrays.end()) return avar(name, ai->second);
    if (!prog_.counters.count(name)) prog_.scalars.insert(name);
    return var(name);
  }
};

}  // namespace

Parsed parse_program(const std::string& source) {
  std::vector<Annotation> annots;
  std::string code = split_source(source, annots);
  Parsed out;
  Parser p(lex(code, 1), out.program, false);
  out.program.body = p.parse_toplevel();
  out.notes = p.notes;
  std::vector<Term> pres, posts;
  for (auto& a : annots) {
    Parser fp(lex(a.text, a.line), out.program, true);
    Term f = fp.parse_whole_formula();
    (a.is_assume ? pres : posts).push_back(f);
  }
  out.spec.pre = and_t(pres);
  out.spec.post = and_t(posts);
  return out;
}

Term parse_formula(const std::string& text, const Program* scope) {
  Program tmp;
  if (scope) tmp = *scope;
  Parser fp(lex(normalize_symbols(text), 1), tmp, true);
  return fp.parse_whole_formula();
}

// ---------------------------------------------------------------------------
// Validation

std::string kind_name(Diagnostic::Kind k) {
  switch (k) {
    case Diagnostic::Kind::ScopeViolation: return "ScopeViolation";
    case Diagnostic::Kind::GrammarViolation: return "GrammarViolation";
    case Diagnostic::Kind::IndexWarning: return "IndexWarning";
    case Diagnostic::Kind::DivisionGuard: return "DivisionGuard";
  }
  return "?";
}

bool is_error(const Diagnostic& d) {
  return d.kind == Diagnostic::Kind::ScopeViolation || d.kind == Diagnostic::Kind::GrammarViolation;
}

namespace {

class Validator {
 public:
  explicit Validator(const Program& p) : p_(p) {}
  std::vector<Diagnostic> out;

  void run() { walk(p_.body, Context{}, {}); }

 private:
  const Program& p_;
  std::set<std::string> seen_counters_;

  void add(Diagnostic::Kind k, const std::string& m) { out.push_back({k, m}); }

  void check_term(const Term& t, const Context& ctx, const std::set<std::string>& bound) {
    for (auto& v : free_vars(t))
      if (p_.counters.count(v) && !bound.count(v))
        add(Diagnostic::Kind::ScopeViolation, "loop counter '" + v + "' read outside its loop");
    check_sub(t, ctx, bound);
  }

  void check_index(const Term& i, const Context& ctx, const std::set<std::string>& bound) {
    for (auto& v : free_vars(i))
      if (v != "N" && !bound.count(v)) return;  // state-dependent: checked at run time
    if (!ctx.prove_le(cst(0), i) || !ctx.prove_le(i, sub(param_n(), cst(1))))
      add(Diagnostic::Kind::IndexWarning,
          "index " + to_string(i) + " may fall outside [0, N)");
  }

  void check_sub(const Term& t, const Context& ctx, const std::set<std::string>& bound) {
    if (t->kind == Kind::Select || t->kind == Kind::Store) {
      std::size_t last = t->kind == Kind::Select ? t->kids.size() : t->kids.size() - 1;
      for (std::size_t k = 1; k < last; ++k) check_index(t->kids[k], ctx, bound);
    }
    if ((t->kind == Kind::Div || t->kind == Kind::Mod) && !is_const(simplify(t->kids[1])))
      add(Diagnostic::Kind::DivisionGuard,
          "denominator " + to_string(t->kids[1]) + " is not a constant");
    for (auto& k : t->kids) check_sub(k, ctx, bound);
  }

  void walk(const StmtP& s, const Context& ctx, std::set<std::string> bound) {
    switch (s->kind) {
      case SKind::Seq:
        for (auto& x : s->body) walk(x, ctx, bound);
        return;
      case SKind::Assign:
      case SKind::ArrayDef:
        if (bound.count(s->name))
          add(Diagnostic::Kind::GrammarViolation, "loop counter '" + s->name + "' is assigned");
        check_term(s->rhs, ctx, bound);
        return;
      case SKind::Store:
        for (auto& i : s->idx) {
          check_term(i, ctx, bound);
          check_index(i, ctx, bound);
        }
        check_term(s->rhs, ctx, bound);
        return;
      case SKind::If:
        check_term(s->rhs, ctx, bound);
        walk(s->body[0], ctx, bound);
        walk(s->body[1], ctx, bound);
        return;
      case SKind::For: {
        for (auto& v : free_vars(s->rhs))
          if (v != "N" && !bound.count(v))
            add(Diagnostic::Kind::ScopeViolation,
                "upper bound of loop '" + s->name + "' refers to '" + v + "'");
        if (!seen_counters_.insert(s->name).second)
          add(Diagnostic::Kind::GrammarViolation, "loop counter '" + s->name + "' is not unique");
        check_sub(s->rhs, ctx, bound);
        bound.insert(s->name);
        walk(s->body[0], ctx.with_counter(s->name, s->rhs), bound);
        return;
      }
    }
  }
};

}  // namespace

std::vector<Diagnostic> validate(const Program& p) {
  Validator v(p);
  v.run();
  return v.out;
}

}  // namespace diffy
