#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "diffy/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Verify array programs parametric in N"};
  app.require_subcommand(1);
  diffy::CliOptions opt;
  std::string solver;
  double timeout = 60;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--solver-path", solver, "SMT solver binary (default: $DIFFY_SOLVER, then z3)");
    sub->add_option("--base-width", opt.engine.base_width, "Base case checks N = 1..M")->check(CLI::PositiveNumber);
    sub->add_option("--base-bound", opt.engine.base_bound, "Counterexample search up to N = B");
    sub->add_option("--unroll-budget", opt.engine.unroll_budget, "Statement budget for unrolling");
    sub->add_option("--timeout", timeout, "Seconds per program");
    sub->add_flag("--json", opt.json, "Machine-readable output");
  };

  std::string file;
  auto* verify = app.add_subcommand("verify", "Verify one program");
  verify->add_option("FILE", file)->required()->check(CLI::ExistingFile);
  verify->add_flag("--emit-ssa", opt.emit_ssa, "Print the SSA form");
  verify->add_flag("--emit-peel", opt.emit_peel, "Print Q and the peel");
  verify->add_flag("--emit-diffinv", opt.emit_diffinv, "Print difference invariants");
  common(verify);

  std::string dir, csv_path;
  auto* corpus = app.add_subcommand("corpus", "Verify every program below a directory");
  corpus->add_option("DIR", dir)->required()->check(CLI::ExistingDirectory);
  corpus->add_option("--jobs", opt.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  corpus->add_option("--csv", csv_path, "Write the CSV table to this file instead of stdout");
  common(corpus);

  CLI11_PARSE(app, argc, argv);
  opt.engine.solver.path = solver;
  opt.engine.timeout_s = timeout;

  try {
    if (verify->parsed()) {
      diffy::FileOutcome o = diffy::run_file(file, opt);
      if (opt.json)
        std::cout << diffy::to_json(o).dump(2) << '\n';
      else
        std::cout << diffy::render_text(o, opt);
      return diffy::exit_code(o);
    }
    auto rows = diffy::run_corpus(dir, opt);
    if (opt.json) {
      nlohmann::json j = nlohmann::json::array();
      for (auto& r : rows) j.push_back(diffy::to_json(r));
      std::cout << j.dump(2) << '\n';
    } else if (!csv_path.empty()) {
      std::ofstream(csv_path) << diffy::corpus_csv(rows);
    } else {
      std::cout << diffy::corpus_csv(rows);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
