#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diffy/frontend.hpp"
#include "diffy/interp.hpp"
#include "diffy/ssa.hpp"
#include "diffy/transform.hpp"

#ifndef DIFFY_CORPUS_DIR
#define DIFFY_CORPUS_DIR "corpus"
#endif

namespace diffy::test {

inline std::string corpus_dir() { return DIFFY_CORPUS_DIR; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Parsed load(const std::string& rel) { return parse_program(read_file(corpus_dir() + "/" + rel)); }

// Every corpus program, sorted, as paths relative to the corpus root.
inline std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (auto& e : std::filesystem::recursive_directory_iterator(corpus_dir()))
    if (e.is_regular_file() && e.path().extension() == ".c")
      out.push_back(std::filesystem::relative(e.path(), corpus_dir()).string());
  std::sort(out.begin(), out.end());
  return out;
}

// Final values of every original variable after running the SSA program.
inline Env final_values(const SsaProgram& sp, const Env& out) {
  Env r;
  r.n = out.n;
  for (auto& [orig, fv] : sp.final_version) {
    if (auto it = out.scalars.find(fv); it != out.scalars.end()) r.scalars[orig] = it->second;
    if (auto it = out.arrays.find(fv); it != out.arrays.end()) r.arrays[orig] = it->second;
  }
  return r;
}

// Q_{N-1} followed by the peel, as one program over the SSA declarations.
inline Program q_then_peel(const SsaProgram& sp, const QAndPeel& qp) {
  Program p = sp.program;
  for (auto& c : qp.peel.counters) {
    p.counters.insert(c);
    p.scalars.insert(c);
  }
  p.body = seq({qp.q.body, qp.peel.body});
  return p;
}

}  // namespace diffy::test
