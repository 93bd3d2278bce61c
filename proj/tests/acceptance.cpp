// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "diffy/cli.hpp"
#include "diffy/diffinv.hpp"
#include "diffy/engine.hpp"
#include "diffy/logic.hpp"
#include "support.hpp"
#include "wp_gen.hpp"

using namespace diffy;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Term nm1() { return sub(param_n(), cst(1)); }
Term cube(const Term& t) { return mul({t, t, t}); }

bool is_equation_for(const Term& f, const std::string& v, const Term& want) {
  Term s = simplify(f);
  if (s->kind != Kind::Cmp || s->rel != Rel::Eq) return false;
  Poly d = to_poly(s->kids[0]) - to_poly(s->kids[1]);
  Poly e = to_poly(var(v)) - to_poly(want);
  return (d - e).is_zero() || (d + e).is_zero();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void fail(const std::string& why) {
    if (pass) detail.str("");
    pass = false;
    detail << why << "; ";
  }
};

Outcome square_steps() {
  Outcome o;
  Parsed p = test::load("c1/safe/square_steps.c");
  VerifyResult r = verify_program(p.program, p.spec, EngineOptions{});
  SsaProgram sp = ssa_rename(p.program, p.spec);
  const std::string x = sp.final_version.at("x");
  if (r.verdict != Verdict::Verified) o.fail("verdict " + verdict_name(r.verdict));
  if (r.millis > 10000) o.fail("took " + std::to_string(r.millis) + " ms");
  if (r.iterations != 1) o.fail("iterations " + std::to_string(r.iterations));
  if (!r.invariant || r.invariant->exit.at(x).top ||
      !(to_poly(r.invariant->exit.at(x).expr) - to_poly(mul(nm1(), sub(mul(cst(2), param_n()), cst(1)))))
           .is_zero())
    o.fail("exit difference of x is not (N-1)(2N-1)");
  if (r.strengthenings.size() != 1) {
    o.fail("strengthenings " + std::to_string(r.strengthenings.size()));
  } else {
    auto& s = r.strengthenings[0];
    if (!is_equation_for(s.chi_prev, x, cube(nm1()))) o.fail("chi(N-1) is " + to_string(s.chi_prev));
    if (!is_equation_for(s.chi, x, cube(param_n()))) o.fail("chi(N) is " + to_string(s.chi));
  }
  if (o.pass)
    o.detail << "Verified in " << static_cast<long>(r.millis) << " ms, 1 strengthening, x'-x = (N-1)(2N-1), "
             << to_string(r.strengthenings[0].chi_prev) << " / " << to_string(r.strengthenings[0].chi);
  return o;
}

Outcome motivating() {
  Outcome o;
  for (const char* f : {"c2/safe/sign_check.c", "c3/safe/fill_count.c"}) {
    Parsed p = test::load(f);
    VerifyResult r = verify_program(p.program, p.spec, EngineOptions{});
    if (r.verdict != Verdict::Verified || r.millis > 60000)
      o.fail(std::string(f) + ": " + r.message);
    else
      o.detail << f << " Verified in " << static_cast<long>(r.millis) << " ms; ";
  }
  return o;
}

Outcome q_peel_equivalence() {
  Outcome o;
  auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  int programs = 0, runs = 0;
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    if (!p.program.unsupported.empty()) continue;
    SsaProgram sp = ssa_rename(p.program, p.spec);
    QAndPeel qp = gen_q_and_peel(sp);
    Program joined = test::q_then_peel(sp, qp);
    ++programs;
    for (std::int64_t n = 1; n <= 5; ++n)
      for (int k = 0; k < 10; ++k, ++runs) {
        Env in = random_env(p.program, n, rng);
        if (!(test::final_values(sp, execute(sp.program, in)) == test::final_values(sp, execute(joined, in))))
          o.fail(f + " differs at N=" + std::to_string(n));
      }
  }
  double s = seconds_since(t0);
  if (s > 120) o.fail("took " + std::to_string(s) + " s");
  if (o.pass) o.detail << programs << " programs, " << runs << " runs agree, " << s << " s";
  return o;
}

Outcome peel_depth() {
  Outcome o;
  int nested = 0, flat = 0;
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    SsaProgram sp = ssa_rename(p.program, p.spec);
    QAndPeel qp = gen_q_and_peel(sp);
    int d = nesting_depth(p.program);
    if (d == 0) continue;
    if (nesting_depth(qp.raw_peel) >= d) o.fail(f + " peel depth not smaller");
    if (d == 1) {
      ++flat;
      if (has_loop(qp.raw_peel)) o.fail(f + " peel has a loop");
    } else {
      ++nested;
    }
  }
  if (o.pass) o.detail << flat << " non-nested programs with loop-free peels, " << nested << " nested programs shrink";
  return o;
}

Outcome corpus() {
  Outcome o;
  CliOptions opt;
  opt.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  opt.engine.timeout_s = 60;
  auto rows = run_corpus(test::corpus_dir(), opt);
  std::map<std::string, int> safe_per_cat;
  std::set<std::string> names;
  for (auto& r : rows) names.insert(r.category + "/" + r.name);
  int safe = 0, safe_ok = 0, mutants = 0, mut_verified = 0, mut_replayed = 0;
  for (auto& r : rows) {
    if (r.category != "c1" && r.category != "c2" && r.category != "c3") continue;
    if (r.result.millis > 60000) o.fail(r.name + " over budget");
    if (r.safe && *r.safe) {
      ++safe;
      if (!names.count(r.category + "/" + r.name + "_mut")) o.fail(r.name + " has no mutant");
      if (r.error.empty() && r.result.verdict == Verdict::Verified) ++safe_ok;
      ++safe_per_cat[r.category];
    } else {
      ++mutants;
      if (r.result.verdict == Verdict::Verified) ++mut_verified;
      if (r.result.verdict == Verdict::Falsified && r.result.replayed) ++mut_replayed;
    }
  }
  if (safe_per_cat["c1"] < 10 || safe_per_cat["c2"] < 6 || safe_per_cat["c3"] < 6)
    o.fail("category sizes c1=" + std::to_string(safe_per_cat["c1"]) + " c2=" +
           std::to_string(safe_per_cat["c2"]) + " c3=" + std::to_string(safe_per_cat["c3"]));
  if (safe_ok * 10 < safe * 9) o.fail("safe verified " + std::to_string(safe_ok) + "/" + std::to_string(safe));
  if (mut_verified) o.fail(std::to_string(mut_verified) + " mutants Verified");
  if (mut_replayed * 10 < mutants * 8)
    o.fail("mutants falsified with replay " + std::to_string(mut_replayed) + "/" + std::to_string(mutants));
  if (o.pass)
    o.detail << "c1/c2/c3 safe " << safe_per_cat["c1"] << "/" << safe_per_cat["c2"] << "/" << safe_per_cat["c3"]
             << ", Verified " << safe_ok << "/" << safe << ", mutants Falsified+replayed " << mut_replayed << "/"
             << mutants << ", mutants Verified 0";
  return o;
}

Outcome wp_oracle() {
  Outcome o;
  test::WpGen g(77);
  std::mt19937_64 rng(78);
  int agree = 0;
  for (int t = 0; t < 200; ++t) {
    Program p = test::WpGen::decls();
    p.body = g.block(2);
    Term post = g.post();
    auto w = wp(post, p.body, Context(1), 1 << 14);
    std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 4);
    Env e = random_env(p, n, rng, -3, 3);
    if (!w) {
      o.fail("wp declined triple " + std::to_string(t));
      continue;
    }
    if (eval_bool(*w, e) != eval_bool(post, execute(p, e)))
      o.fail("triple " + std::to_string(t) + " disagrees");
    else
      ++agree;
  }
  if (o.pass) o.detail << agree << "/200 triples agree";
  return o;
}

Outcome diffinv() {
  Outcome o;
  SolverConfig cfg;
  int emitted = 0, declined = 0;
  for (auto& f : test::corpus_files()) {
    Parsed p = test::load(f);
    if (!p.program.unsupported.empty() || nesting_depth(p.program) == 0) continue;
    SsaProgram sp = ssa_rename(p.program, p.spec);
    QAndPeel qp = gen_q_and_peel(sp);
    DiffInvOptions opt;
    auto infer = [&](const SsaProgram& s) -> std::optional<DiffInvariant> {
      reset_fresh_names();
      try {
        return infer_diff_invariants(s, qp, s.spec.pre, opt);
      } catch (const DiffInvError&) {
        return std::nullopt;
      }
    };
    auto d = infer(sp);
    if (!d) {
      ++declined;
      continue;
    }
    ++emitted;
    if (check_invariant_inductive(sp, qp, sp.spec.pre, *d, opt) != Validity::Valid) o.fail(f + " not inductive");
    std::mt19937_64 rng(6);
    for (std::int64_t n = 2; n <= 5; ++n) {
      std::string bad = concrete_check(sp, qp, sp.spec.pre, *d, n, rng, &cfg);
      if (!bad.empty()) o.fail(f + " N=" + std::to_string(n) + ": " + bad);
    }
    Spec other = p.spec;
    other.post = ge(param_n(), cst(0));
    SsaProgram sp2 = ssa_rename(p.program, other);
    auto d2 = infer(sp2);
    if (!d2 || describe(*d2) != describe(*d)) o.fail(f + " depends on the post");
  }
  if (o.pass)
    o.detail << emitted << " programs: inductive, concrete N=2..5 and post-independent; " << declined
             << " declined";
  return o;
}

Outcome existential() {
  Outcome o;
  int verified = 0, unknown = 0, total = 0;
  for (auto& e : fs::directory_iterator(test::corpus_dir() + "/existential")) {
    if (e.path().extension() != ".c") continue;
    ++total;
    Parsed p = parse_program(test::read_file(e.path().string()));
    VerifyResult r = p.program.unsupported.empty() ? verify_existential(p.program, p.spec, EngineOptions{})
                                                   : verify_program(p.program, p.spec, EngineOptions{});
    if (r.verdict == Verdict::Verified)
      ++verified;
    else if (r.verdict == Verdict::Unknown)
      ++unknown;
    else
      o.fail(e.path().stem().string() + " " + verdict_name(r.verdict));
  }
  if (total != 6) o.fail("expected 6 programs, found " + std::to_string(total));
  if (verified < 4) o.fail("only " + std::to_string(verified) + " Verified");
  if (o.pass) o.detail << verified << "/6 Verified, " << unknown << " Unknown";
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"worked example", square_steps},           {"motivating programs", motivating},
      {"Q;peel equivalence", q_peel_equivalence},   {"peel depth", peel_depth},
      {"corpus table", corpus},           {"wp oracle", wp_oracle},
      {"difference invariants", diffinv}, {"existential suite", existential},
  };
  int failed = 0;
  for (std::size_t k = 0; k < std::size(criteria); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << " (" << criteria[k].first
              << "): " << o.detail.str() << std::endl;
  }
  return failed ? 1 : 0;
}
