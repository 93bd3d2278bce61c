#include "diffy/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "diffy/frontend.hpp"

namespace fs = std::filesystem;

namespace diffy {

int exit_code(const FileOutcome& o) {
  if (!o.error.empty()) return 3;
  switch (o.result.verdict) {
    case Verdict::Verified: return 0;
    case Verdict::Falsified: return 1;
    case Verdict::Unknown: return 2;
  }
  return 3;
}

namespace {

void classify(FileOutcome& o) {
  fs::path p(o.path);
  o.name = p.stem().string();
  std::string parent = p.parent_path().filename().string();
  if (parent == "safe" || parent == "unsafe") {
    o.safe = parent == "safe";
    o.category = p.parent_path().parent_path().filename().string();
  } else {
    o.category = parent;
    if (parent == "existential") o.safe = true;
  }
}

}  // namespace

FileOutcome run_file(const std::string& path, const CliOptions& opt) {
  FileOutcome o;
  o.path = path;
  classify(o);
  std::ifstream in(path);
  if (!in) {
    o.error = "cannot read " + path;
    return o;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    Parsed parsed = parse_program(ss.str());
    for (auto& d : validate(parsed.program))
      if (is_error(d)) {
        o.error = kind_name(d.kind) + ": " + d.message;
        return o;
      }
    o.result = verify_program(parsed.program, parsed.spec, opt.engine);
  } catch (const ParseError& e) {
    o.error = e.what();
  } catch (const std::exception& e) {
    o.error = std::string("internal error: ") + e.what();
  }
  return o;
}

std::vector<FileOutcome> run_corpus(const std::string& dir, const CliOptions& opt) {
  std::vector<std::string> files;
  for (auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".c") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  std::vector<FileOutcome> out(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < files.size();) out[k] = run_file(files[k], opt);
  };
  int jobs = std::max(1, opt.jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

std::string corpus_csv(const std::vector<FileOutcome>& rows) {
  std::ostringstream os;
  os << "name,category,safe,verdict,millis\n";
  for (auto& r : rows) {
    std::string verdict = r.error.empty() ? verdict_name(r.result.verdict) : "Error";
    os << r.name << ',' << r.category << ',' << (r.safe ? (*r.safe ? "true" : "false") : "") << ','
       << verdict << ',' << static_cast<long long>(r.result.millis) << '\n';
  }
  return os.str();
}

namespace {

nlohmann::json env_json(const Env& e) {
  nlohmann::json j;
  j["N"] = e.n;
  j["scalars"] = nlohmann::json::object();
  for (auto& [k, v] : e.scalars) j["scalars"][k] = v;
  j["arrays"] = nlohmann::json::object();
  for (auto& [k, a] : e.arrays) j["arrays"][k] = a.cells;
  return j;
}

}  // namespace

nlohmann::json to_json(const FileOutcome& o) {
  nlohmann::json j;
  j["file"] = o.path;
  j["name"] = o.name;
  j["category"] = o.category;
  if (o.safe) j["safe"] = *o.safe;
  if (!o.error.empty()) {
    j["verdict"] = "Error";
    j["error"] = o.error;
    return j;
  }
  const VerifyResult& r = o.result;
  j["verdict"] = verdict_name(r.verdict);
  j["message"] = r.message;
  if (!r.reason.empty()) j["reason"] = r.reason;
  j["millis"] = r.millis;
  j["solverQueries"] = r.solver_queries;
  j["baseWidth"] = r.base_width;
  j["iterations"] = r.iterations;
  j["recursionDepth"] = r.recursion_depth;
  if (r.invariant) {
    j["invariants"] = describe(*r.invariant);
    std::vector<std::string> facts;
    for (auto& f : r.invariant->facts) facts.push_back(to_string(f));
    j["facts"] = facts;
    nlohmann::json br = nlohmann::json::array();
    for (auto& b : r.invariant->branches) br.push_back({{"cond", b.cond}, {"synced", b.synced}});
    j["branches"] = br;
  }
  if (r.psi_prime) j["psiPrime"] = to_string(r.psi_prime);
  nlohmann::json st = nlohmann::json::array();
  for (auto& s : r.strengthenings)
    st.push_back({{"chiPrime", to_string(s.chi_prime)}, {"chiPrev", to_string(s.chi_prev)}, {"chi", to_string(s.chi)}});
  j["strengthenings"] = st;
  if (r.witness) {
    j["witness"] = env_json(*r.witness);
    j["replayed"] = r.replayed;
  }
  return j;
}

std::string render_text(const FileOutcome& o, const CliOptions& opt) {
  std::ostringstream os;
  if (!o.error.empty()) {
    os << "Error: " << o.error << '\n';
    return os.str();
  }
  const VerifyResult& r = o.result;
  if (opt.emit_ssa && !r.ssa_source.empty()) os << "--- ssa\n" << r.ssa_source;
  if (opt.emit_peel && !r.q_source.empty()) os << "--- q\n" << r.q_source << "--- peel\n" << r.peel_source;
  if (opt.emit_diffinv && r.invariant) {
    os << "--- difference invariants\n";
    for (auto& l : describe(*r.invariant)) os << l << '\n';
    for (auto& f : r.invariant->facts) os << "fact " << to_string(f) << '\n';
    for (auto& s : r.strengthenings)
      os << "strengthen " << to_string(s.chi_prime) << "  =>  " << to_string(s.chi) << '\n';
  }
  os << r.message << '\n';
  if (r.witness) {
    os << "witness at N=" << r.witness_n << (r.replayed ? " (replayed)" : "") << ": "
       << env_to_string(*r.witness) << '\n';
  }
  return os.str();
}

}  // namespace diffy
