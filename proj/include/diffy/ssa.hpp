#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffy/ast.hpp"

namespace diffy {

struct SsaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Region-level SSA: every top-level statement defines fresh versions of the
// variables it writes. A top-level loop owns one version per written
// variable, seeded by a copy-in right before the loop.
struct SsaProgram {
  Program program;  // declares all versions
  Spec spec;        // pre over entry names, post over final versions
  std::map<std::string, std::vector<std::string>> versions;  // original -> versions, in order
  std::map<std::string, std::string> final_version;          // original -> version at exit
  std::set<std::string> originals;                           // entry names (non-counter)
};

// Version `k` of `name`.
std::string version_name(const std::string& name, int k);
// Original variable of a version name (identity on entry names).
std::string original_name(const std::string& version);

SsaProgram ssa_rename(const Program& p, const Spec& s);

// Rename a formula over original names to the final versions.
Term to_final_versions(const SsaProgram& sp, const Term& f);

}  // namespace diffy
