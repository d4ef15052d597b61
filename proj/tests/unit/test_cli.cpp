#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "nsr_tables.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "igbeat");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = igbeat::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("igbeat_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Cli, UnknownSubcommandFails) {
  const auto r = run_cli({"fly"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty() && r.out.empty());
  EXPECT_NE(run_cli({}).code, 0);
  EXPECT_NE(run_cli({"synth", "--no-such-flag"}).code, 0);
  EXPECT_NE(run_cli({"train", "--variant", "transformer"}).code, 0);
}

TEST(Cli, HelpSucceeds) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE((r.out + r.err).find("synth"), std::string::npos);
}

TEST(Cli, SynthIsDeterministic) {
  const fs::path a = fresh("synth_a"), b = fresh("synth_b");
  for (const auto& d : {a, b}) {
    const auto r = run_cli({"synth", "--beats", "5000", "--seed", "7", "--subjects", "2", "--out",
                            d.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_EQ(files, 7u);  // 2 x (series, truth), manifest, config, synth.txt
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, PreprocessSyntheticEcg) {
  const fs::path d = fresh("pre");
  ASSERT_EQ(run_cli({"synth", "--beats", "120", "--subjects", "1", "--ecg-fs", "128", "--out",
                     d.string()})
                .code,
            0);
  const auto r = run_cli({"preprocess", (d / "syn01_ecg.csv").string(), "--out",
                          (d / "rr.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "rr.csv"));
  EXPECT_NE(r.out.find("intervals"), std::string::npos);
  EXPECT_NE(run_cli({"preprocess", (d / "missing.csv").string()}).code, 0);
  fs::remove_all(d);
}

TEST(Cli, TrainEvaluateReport) {
  const fs::path d = fresh("train");
  ASSERT_EQ(run_cli({"synth", "--beats", "200", "--subjects", "3", "--out", (d / "data").string()})
                .code,
            0);
  {
    std::ofstream c(d / "small.txt");
    c << "model_dim = 6\nstate_dim = 3\nwrite_plots = false\n";
  }
  const auto r = run_cli({"train", "--config", (d / "small.txt").string(), "--manifest",
                          (d / "data" / "manifest.csv").string(), "--train-len", "60",
                          "--test-len", "60", "--max-epochs", "2", "--test-subject", "syn02",
                          "--quiet", "--out", (d / "run").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const fs::path fold = d / "run" / "fold_syn02";
  for (const char* f : {"checkpoint.json", "train_log.csv", "fold.csv", "config.txt"})
    EXPECT_TRUE(fs::exists(fold / f)) << f;
  EXPECT_FALSE(fs::exists(d / "run" / "fold_syn01"));
  EXPECT_NE(slurp(d / "run" / "config.txt").find("model_dim = 6"), std::string::npos);

  const auto ev = run_cli({"evaluate", "--checkpoint", (fold / "checkpoint.json").string(),
                           "--test-len", "60", "--out", (d / "eval").string(),
                           (d / "data" / "syn02.csv").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_TRUE(fs::exists(d / "eval" / "syn02" / "fold.csv"));
  EXPECT_TRUE(fs::exists(d / "eval" / "syn02" / "ks" / "segment_0.svg"));
  EXPECT_EQ(slurp(d / "eval" / "syn02" / "fold.csv"), slurp(fold / "fold.csv"));

  const auto rep = run_cli({"report", (d / "run").string(), "--out", (d / "rep").string()});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_TRUE(fs::exists(d / "rep" / "table_60.csv"));
  fs::remove_all(d);
}

TEST(Cli, ReportOverEighteenFolds) {
  const fs::path d = fresh("report");
  for (const auto& row : igbeat::testing::kNsr600) {
    const fs::path sub = d / ("fold_" + row.subject);
    fs::create_directories(sub);
    std::ofstream f(sub / "fold.csv");
    const double half = row.cells[0].second / std::sqrt(2.0);
    f << "subject_id,variant,segment_index,ksd,bound,pass\n";
    f.precision(17);
    f << row.subject << ",gru,0," << row.cells[0].first - half << ",0.05556,0\n";
    f << row.subject << ",gru,1," << row.cells[0].first + half << ",0.05556,0\n";
  }
  const auto r = run_cli({"report", d.string(), "--out", (d / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream summary(slurp(d / "out" / "summary.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(summary, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 1u + 18u + 1u);
  EXPECT_EQ(lines.back().rfind("Overall Mean,", 0), 0u);
  const std::string table = slurp(d / "out" / "table_600.csv");
  EXPECT_NE(table.find("Overall Mean,0.0925,,,"), std::string::npos);
  fs::remove_all(d);
}
