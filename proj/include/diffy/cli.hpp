#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diffy/engine.hpp"
#include "json.hpp"

namespace diffy {

struct CliOptions {
  EngineOptions engine;
  bool emit_ssa = false;
  bool emit_peel = false;
  bool emit_diffinv = false;
  bool json = false;
  int jobs = 1;
};

struct FileOutcome {
  std::string path;
  std::string name;      // file stem
  std::string category;  // c1, c2, c3, existential, or empty
  std::optional<bool> safe;
  VerifyResult result;
  std::string error;     // parse or internal error
};

// Exit status for a single-file run: 0 Verified, 1 Falsified, 2 Unknown, 3 error.
int exit_code(const FileOutcome& o);

FileOutcome run_file(const std::string& path, const CliOptions& opt);

// Every *.c below dir, in sorted path order, verified with opt.jobs workers.
std::vector<FileOutcome> run_corpus(const std::string& dir, const CliOptions& opt);

// name,category,safe,verdict,millis
std::string corpus_csv(const std::vector<FileOutcome>& rows);

nlohmann::json to_json(const FileOutcome& o);
std::string render_text(const FileOutcome& o, const CliOptions& opt);

}  // namespace diffy
