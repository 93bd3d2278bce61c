#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "diffy/cli.hpp"
#include "support.hpp"

using namespace diffy;
namespace fs = std::filesystem;

namespace {

std::string path(const std::string& rel) { return test::corpus_dir() + "/" + rel; }

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("diffy_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Cli, ExitCodes) {
  CliOptions opt;
  EXPECT_EQ(exit_code(run_file(path("c1/safe/square_steps.c"), opt)), 0);
  EXPECT_EQ(exit_code(run_file(path("c1/unsafe/square_steps_mut.c"), opt)), 1);
  EXPECT_EQ(exit_code(run_file(path("existential/average.c"), opt)), 2);
  EXPECT_EQ(exit_code(run_file(path("does/not/exist.c"), opt)), 3);

  fs::path d = scratch_dir("bad");
  std::ofstream(d / "bad.c") << "void f(int N) {\n x = ;\n}\n";
  FileOutcome bad = run_file((d / "bad.c").string(), opt);
  EXPECT_EQ(exit_code(bad), 3);
  EXPECT_FALSE(bad.error.empty());
  fs::remove_all(d);
}

TEST(Cli, ClassifiesByDirectory) {
  CliOptions opt;
  FileOutcome a = run_file(path("c3/unsafe/square_fill_mut.c"), opt);
  EXPECT_EQ(a.name, "square_fill_mut");
  EXPECT_EQ(a.category, "c3");
  ASSERT_TRUE(a.safe);
  EXPECT_FALSE(*a.safe);
  FileOutcome b = run_file(path("existential/max.c"), opt);
  EXPECT_EQ(b.category, "existential");
  ASSERT_TRUE(b.safe);
  EXPECT_TRUE(*b.safe);
}

TEST(Cli, JsonRecord) {
  CliOptions opt;
  nlohmann::json j = to_json(run_file(path("c1/safe/square_steps.c"), opt));
  EXPECT_EQ(j["verdict"], "Verified");
  EXPECT_EQ(j["iterations"], 1);
  EXPECT_EQ(j["category"], "c1");
  EXPECT_TRUE(j["safe"].get<bool>());
  for (const char* k : {"file", "name", "message", "millis", "solverQueries", "baseWidth", "recursionDepth",
                        "invariants", "facts", "branches", "psiPrime", "strengthenings"})
    EXPECT_TRUE(j.contains(k)) << k;
  ASSERT_EQ(j["strengthenings"].size(), 1u);
  for (const char* k : {"chiPrime", "chiPrev", "chi"}) EXPECT_TRUE(j["strengthenings"][0].contains(k)) << k;

  nlohmann::json m = to_json(run_file(path("c1/unsafe/square_steps_mut.c"), opt));
  EXPECT_EQ(m["verdict"], "Falsified");
  ASSERT_TRUE(m.contains("witness"));
  EXPECT_TRUE(m["witness"].contains("N"));
  EXPECT_TRUE(m["replayed"].get<bool>());
}

TEST(Cli, TextOutputEmitsRequestedSections) {
  CliOptions opt;
  opt.emit_ssa = opt.emit_peel = opt.emit_diffinv = true;
  std::string t = render_text(run_file(path("c1/safe/square_steps.c"), opt), opt);
  EXPECT_NE(t.find("--- ssa"), std::string::npos);
  EXPECT_NE(t.find("--- peel"), std::string::npos);
  EXPECT_NE(t.find("--- difference invariants"), std::string::npos);
  EXPECT_NE(t.find("Verified"), std::string::npos);
}

TEST(Cli, CorpusReportHasOneRowPerProgram) {
  fs::path d = scratch_dir("corpus");
  fs::create_directories(d / "c1" / "safe");
  fs::create_directories(d / "c1" / "unsafe");
  fs::copy_file(path("c1/safe/count.c"), d / "c1" / "safe" / "count.c");
  fs::copy_file(path("c1/unsafe/count_mut.c"), d / "c1" / "unsafe" / "count_mut.c");
  CliOptions opt;
  opt.jobs = 2;
  auto rows = run_corpus(d.string(), opt);
  std::string csv = corpus_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "name,category,safe,verdict,millis");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("count,c1,true,Verified,", 0), 0u) << line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("count_mut,c1,false,Falsified,", 0), 0u) << line;
  EXPECT_FALSE(std::getline(in, line));
  fs::remove_all(d);
}

TEST(Cli, EmptyDirectoryGivesAnEmptyReport) {
  fs::path d = scratch_dir("empty");
  auto rows = run_corpus(d.string(), CliOptions{});
  EXPECT_TRUE(rows.empty());
  EXPECT_EQ(corpus_csv(rows), "name,category,safe,verdict,millis\n");
  fs::remove_all(d);
}
