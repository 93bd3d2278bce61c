#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "diffy/ast.hpp"

namespace diffy {

struct ParseError : std::runtime_error {
  enum class Kind { Syntax, Grammar };
  Kind kind;
  int line;
  int col;
  ParseError(Kind k, int l, int c, const std::string& msg);
};

struct Parsed {
  Program program;
  Spec spec;
  std::vector<std::string> notes;  // e.g. renamed loop counters
};

// Parse a program with `// assume(...)` / `// assert(...)` annotations.
Parsed parse_program(const std::string& source);

// Parse a stand-alone formula in annotation syntax. Array names are
// recognized from `arrays` (and from indexing syntax).
Term parse_formula(const std::string& text, const Program* scope = nullptr);

struct Diagnostic {
  enum class Kind { ScopeViolation, GrammarViolation, IndexWarning, DivisionGuard };
  Kind kind;
  std::string message;
};

std::string kind_name(Diagnostic::Kind k);
bool is_error(const Diagnostic& d);

std::vector<Diagnostic> validate(const Program& p);

}  // namespace diffy
